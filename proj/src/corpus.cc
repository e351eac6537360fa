#include "lepton/corpus.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <thread>

namespace lepton {

Spread spread_of(std::vector<double> v) {
  Spread s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
  // Nearest rank.
  auto pct = [&](double p) {
    size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    return v[std::clamp<size_t>(rank, 1, v.size()) - 1];
  };
  s.p50 = pct(50);
  s.p75 = pct(75);
  s.p95 = pct(95);
  s.p99 = pct(99);
  return s;
}

CorpusSummary summarize(const std::vector<CorpusRecord>& records) {
  CorpusSummary s;
  s.files = records.size();
  std::map<Status, size_t> counts;
  std::vector<double> ratios, enc, dec;
  std::array<std::vector<double>, ComponentBreakdown::kPartCount> parts;
  for (const CorpusRecord& r : records) {
    if (r.io_error) {
      ++s.io_errors;
      continue;
    }
    ++counts[r.status];
    if (r.status == Status::kRoundtripFailed) ++s.roundtrip_failures;
    if (r.status != Status::kSuccess) continue;
    ++s.success;
    s.input_bytes += r.input_size;
    s.output_bytes += r.output_size;
    ratios.push_back(r.ratio);
    enc.push_back(r.encode_seconds);
    dec.push_back(r.decode_seconds);
    s.parts.add(r.breakdown);
    for (int p = 0; p < ComponentBreakdown::kPartCount; ++p) {
      const auto part = static_cast<ComponentBreakdown::Part>(p);
      if (r.breakdown.original[p] > 0) parts[p].push_back(r.breakdown.ratio(part));
    }
  }
  s.by_status.assign(counts.begin(), counts.end());
  s.aggregate_ratio = s.input_bytes ? static_cast<double>(s.output_bytes) / static_cast<double>(s.input_bytes) : 0;
  s.ratio = spread_of(ratios);
  s.encode_seconds = spread_of(enc);
  s.decode_seconds = spread_of(dec);
  for (int p = 0; p < ComponentBreakdown::kPartCount; ++p) s.part_ratio[p] = spread_of(parts[p]);
  return s;
}

CorpusRecord verify_file(const std::string& path, const CompressOptions& options) {
  CorpusRecord r;
  r.path = path;
  std::ifstream f(path, std::ios::binary);
  Bytes data;
  if (f) data.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  if (!f && !f.eof()) {
    r.io_error = true;
    r.message = "cannot read file";
    return r;
  }
  CompressOptions opts = options;
  opts.collect_costs = true;
  const VerifyReport v = verify(data, opts);
  r.status = v.status;
  r.message = v.message;
  r.input_size = v.input_size;
  r.output_size = v.output_size;
  r.ratio = v.ratio;
  r.breakdown = v.breakdown;
  r.encode_seconds = v.encode_seconds;
  r.decode_seconds = v.decode_seconds;
  return r;
}

std::vector<std::string> list_files(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CorpusRecord> run_corpus(const std::vector<std::string>& paths, int jobs,
                                     const CompressOptions& options,
                                     const std::function<void(const CorpusRecord&)>& on_record) {
  std::vector<CorpusRecord> records(paths.size());
  std::atomic<size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < paths.size();) {
      records[i] = verify_file(paths[i], options);
      if (on_record) {
        std::lock_guard<std::mutex> lock(mu);
        on_record(records[i]);
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(paths.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

}  // namespace lepton
