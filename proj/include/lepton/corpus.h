#pragma once

// Corpus runs: verify many files with bounded parallelism and summarise
// the results.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lepton/pipeline.h"

namespace lepton {

struct CorpusRecord {
  std::string path;
  Status status = Status::kSuccess;
  std::string message;
  uint64_t input_size = 0;
  uint64_t output_size = 0;
  double ratio = 0;
  ComponentBreakdown breakdown;
  double encode_seconds = 0;
  double decode_seconds = 0;
  bool io_error = false;
};

struct Spread {
  double mean = 0;
  double stddev = 0;  // population
  double p50 = 0, p75 = 0, p95 = 0, p99 = 0;
};

Spread spread_of(std::vector<double> values);

struct CorpusSummary {
  size_t files = 0;
  size_t success = 0;
  size_t roundtrip_failures = 0;
  size_t io_errors = 0;
  std::vector<std::pair<Status, size_t>> by_status;  // every status seen, enum order
  uint64_t input_bytes = 0;                          // Success files only
  uint64_t output_bytes = 0;
  double aggregate_ratio = 0;  // output_bytes / input_bytes
  Spread ratio;
  std::array<Spread, ComponentBreakdown::kPartCount> part_ratio;  // per-file ratios
  ComponentBreakdown parts;                                       // byte totals
  Spread decode_seconds;
  Spread encode_seconds;

  // A file the codec accepted but could not reproduce.
  bool any_failure() const { return roundtrip_failures > 0; }
};

CorpusSummary summarize(const std::vector<CorpusRecord>& records);

CorpusRecord verify_file(const std::string& path, const CompressOptions& options = {});

// Every regular file below `dir`, sorted.
std::vector<std::string> list_files(const std::string& dir);

// Runs verify_file on each path with up to `jobs` at a time. `on_record`
// is called under a lock as each file finishes. Records come back in input order.
std::vector<CorpusRecord> run_corpus(const std::vector<std::string>& paths, int jobs,
                                     const CompressOptions& options,
                                     const std::function<void(const CorpusRecord&)>& on_record = {});

}  // namespace lepton
