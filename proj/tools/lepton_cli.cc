// lepton: command-line front end over the library.

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lepton/coeff_model.h"
#include "lepton/corpus.h"
#include "lepton/pipeline.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lepton;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kIoError = 2,
  kCorpusFailure = 3,
  kBadContainer = 4,
  kStatusBase = 9,  // + Status value, so Progressive is 10 and Timeout 19
};

int exit_for(Status s) { return s == Status::kSuccess ? kOk : kStatusBase + static_cast<int>(s); }

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Bytes read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open " + path);
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoFailure("cannot read " + path);
  return data;
}

// Writes to a temporary next to `path`, then renames over it, so readers
// never see a partial file.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path)
      : path_(std::move(path)), tmp_(path_ + ".tmp." + std::to_string(::getpid())) {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoFailure("cannot create " + tmp_);
  }
  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }
  void write(ByteSpan b) {
    out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out_) throw IoFailure("write failed: " + tmp_);
  }
  void commit() {
    out_.close();
    if (!out_) throw IoFailure("write failed: " + tmp_);
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    if (ec) throw IoFailure("cannot rename to " + path_ + ": " + ec.message());
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

class FileSink : public Sink {
 public:
  explicit FileSink(AtomicFile& f) : f_(f) {}
  void write(ByteSpan bytes) override { f_.write(bytes); }

 private:
  AtomicFile& f_;
};

class FileInput : public Input {
 public:
  explicit FileInput(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoFailure("cannot open " + path);
  }
  size_t read(uint8_t* dst, size_t n) override {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.bad()) fail(ErrorCode::kIo, "read error");
    return static_cast<size_t>(in_.gcount());
  }

 private:
  std::ifstream in_;
};

// "24M", "4096", "1G" -> bytes.
std::optional<size_t> parse_size(const std::string& s) {
  if (s.empty()) return std::nullopt;
  size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (...) {
    return std::nullopt;
  }
  const std::string suffix = s.substr(pos);
  static const std::pair<const char*, int> kUnits[] = {
      {"", 0}, {"K", 10}, {"KB", 10}, {"KiB", 10}, {"M", 20}, {"MB", 20}, {"MiB", 20}, {"G", 30}, {"GB", 30}, {"GiB", 30}};
  for (auto& [name, shift] : kUnits) {
    if (suffix == name) return static_cast<size_t>(v) << shift;
  }
  return std::nullopt;
}

size_t env_limit(const char* name, size_t fallback) {
  const char* v = std::getenv(name);
  if (!v) return fallback;
  if (auto s = parse_size(v)) return *s;
  std::cerr << "warning: ignoring unparsable " << name << "=" << v << "\n";
  return fallback;
}

CompressOptions base_compress_options() {
  CompressOptions o;
  o.mem_limit_encode = env_limit("LEPTON_MEM_LIMIT_ENCODE", kDefaultMemLimitEncode);
  return o;
}

DecompressOptions base_decompress_options() {
  DecompressOptions o;
  o.mem_limit_decode = env_limit("LEPTON_MEM_LIMIT_DECODE", kDefaultMemLimitDecode);
  return o;
}

std::string chunk_path(const std::string& out, size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, ".%04zu", i);
  return out + buf;
}

const char* kPartNames[] = {"header", "7x7", "edge", "dc"};

json breakdown_json(const ComponentBreakdown& b) {
  json j = json::object();
  for (int p = 0; p < ComponentBreakdown::kPartCount; ++p) {
    j[kPartNames[p]] = {{"original", b.original[p]},
                        {"coded", b.coded[p]},
                        {"ratio", b.ratio(static_cast<ComponentBreakdown::Part>(p))}};
  }
  return j;
}

json spread_json(const Spread& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"p50", s.p50}, {"p75", s.p75}, {"p95", s.p95}, {"p99", s.p99}};
}

json record_json(const CorpusRecord& r) {
  json j = {{"path", r.path},
            {"status", r.io_error ? "IoError" : std::string(status_name(r.status))},
            {"input_size", r.input_size},
            {"output_size", r.output_size},
            {"ratio", r.ratio},
            {"encode_seconds", r.encode_seconds},
            {"decode_seconds", r.decode_seconds}};
  if (!r.message.empty()) j["message"] = r.message;
  if (r.status == Status::kSuccess && !r.io_error) j["breakdown"] = breakdown_json(r.breakdown);
  return j;
}

json summary_json(const CorpusSummary& s) {
  json by = json::object();
  for (auto& [st, n] : s.by_status) by[std::string(status_name(st))] = n;
  json parts = json::object();
  for (int p = 0; p < ComponentBreakdown::kPartCount; ++p) {
    parts[kPartNames[p]] = spread_json(s.part_ratio[p]);
    parts[kPartNames[p]]["aggregate"] = s.parts.ratio(static_cast<ComponentBreakdown::Part>(p));
  }
  return {{"files", s.files},
          {"success", s.success},
          {"roundtrip_failures", s.roundtrip_failures},
          {"io_errors", s.io_errors},
          {"by_status", by},
          {"input_bytes", s.input_bytes},
          {"output_bytes", s.output_bytes},
          {"aggregate_ratio", s.aggregate_ratio},
          {"ratio", spread_json(s.ratio)},
          {"parts", parts},
          {"encode_seconds", spread_json(s.encode_seconds)},
          {"decode_seconds", spread_json(s.decode_seconds)}};
}

void print_summary(const CorpusSummary& s, std::ostream& os) {
  char line[160];
  os << "files " << s.files << ", success " << s.success << ", round-trip failures " << s.roundtrip_failures
     << ", I/O errors " << s.io_errors << "\n";
  for (auto& [st, n] : s.by_status) os << "  " << status_name(st) << ": " << n << "\n";
  std::snprintf(line, sizeof line, "ratio  mean %.2f%% +- %.2f  p50 %.2f%%  p95 %.2f%%  aggregate %.2f%%\n",
                100 * s.ratio.mean, 100 * s.ratio.stddev, 100 * s.ratio.p50, 100 * s.ratio.p95,
                100 * s.aggregate_ratio);
  os << line;
  os << "component     bytes in     ratio (mean +- sd)   aggregate\n";
  for (int p = 0; p < ComponentBreakdown::kPartCount; ++p) {
    const Spread& r = s.part_ratio[p];
    std::snprintf(line, sizeof line, "  %-8s %13.0f   %6.2f%% +- %5.2f      %6.2f%%\n", kPartNames[p], s.parts.original[p],
                  100 * r.mean, 100 * r.stddev, 100 * s.parts.ratio(static_cast<ComponentBreakdown::Part>(p)));
    os << line;
  }
  std::snprintf(line, sizeof line, "decode ms  p50 %.1f  p99 %.1f   encode ms  p50 %.1f  p99 %.1f\n",
                1e3 * s.decode_seconds.p50, 1e3 * s.decode_seconds.p99, 1e3 * s.encode_seconds.p50,
                1e3 * s.encode_seconds.p99);
  os << line;
}

// ---------------------------------------------------------------------------

int cmd_compress(const std::string& in, const std::string& out, int segments, std::optional<size_t> chunk,
                 double timeout, int threads) {
  const Bytes data = read_all(in);
  CompressOptions opt = base_compress_options();
  opt.segments = segments;
  opt.timeout_seconds = timeout;
  opt.threads = threads;
  if (!chunk) {
    const CompressionResult r = compress(data, opt);
    if (r.status != Status::kSuccess) {
      std::cerr << in << ": " << status_name(r.status) << (r.message.empty() ? "" : ": " + r.message) << "\n";
      return exit_for(r.status);
    }
    AtomicFile f(out);
    f.write(*r.output);
    f.commit();
    std::cerr << in << ": " << data.size() << " -> " << r.output->size() << " bytes ("
              << 100.0 * r.ratio << "%)\n";
    return kOk;
  }
  if (*chunk < kMinChunkSize) {
    std::cerr << "--chunk-size must be at least " << kMinChunkSize << "\n";
    return kUsage;
  }
  const ChunkedResult r = compress_chunked(data, *chunk, opt);
  if (r.status != Status::kSuccess) {
    std::cerr << in << ": " << status_name(r.status) << (r.message.empty() ? "" : ": " + r.message) << "\n";
    return exit_for(r.status);
  }
  size_t total = 0;
  for (size_t i = 0; i < r.containers.size(); ++i) {
    AtomicFile f(chunk_path(out, i));
    f.write(r.containers[i]);
    f.commit();
    total += r.containers[i].size();
  }
  std::cerr << in << ": " << r.containers.size() << " chunks, " << data.size() << " -> " << total << " bytes\n";
  return kOk;
}

int cmd_decompress(const std::vector<std::string>& inputs, const std::string& out, int threads) {
  DecompressOptions opt = base_decompress_options();
  opt.threads = threads;
  AtomicFile f(out);
  FileSink sink(f);
  for (const std::string& in : inputs) {
    FileInput input(in);
    try {
      decompress(input, sink, opt);
    } catch (const Error& e) {
      std::cerr << in << ": " << error_code_name(e.code()) << ": " << e.what() << "\n";
      if (e.code() == ErrorCode::kMemLimitDecode) return exit_for(Status::kMemLimitDecode);
      if (e.code() == ErrorCode::kIo) return kIoError;
      return kBadContainer;
    }
  }
  f.commit();
  return kOk;
}

int cmd_verify(const std::string& in, int segments, bool as_json) {
  CompressOptions opt = base_compress_options();
  opt.segments = segments;
  const Bytes data = read_all(in);
  const VerifyReport r = verify(data, opt);
  if (as_json) {
    json j = {{"path", in},
              {"status", status_name(r.status)},
              {"input_size", r.input_size},
              {"output_size", r.output_size},
              {"output_size_single_segment", r.output_size_single},
              {"ratio", r.ratio},
              {"segments", r.segments},
              {"encode_seconds", r.encode_seconds},
              {"decode_seconds", r.decode_seconds}};
    if (!r.message.empty()) j["message"] = r.message;
    if (r.status == Status::kSuccess) j["breakdown"] = breakdown_json(r.breakdown);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << in << ": " << status_name(r.status);
    if (!r.message.empty()) std::cout << " (" << r.message << ")";
    if (r.status == Status::kSuccess) {
      std::cout << "  " << r.input_size << " -> " << r.output_size << " bytes, " << 100.0 * r.ratio << "%, "
                << r.segments << " segments; single segment " << r.output_size_single << " bytes";
    }
    std::cout << "\n";
  }
  return exit_for(r.status);
}

int cmd_corpus(const std::string& dir, int jobs, const std::string& report) {
  const std::vector<std::string> paths = list_files(dir);
  std::unique_ptr<AtomicFile> rep;
  std::ofstream live;
  // Records are appended as files finish, so an interrupted run keeps
  // what it had; the final report replaces the partial one.
  const std::string partial = report.empty() ? "" : report + ".partial";
  if (!report.empty()) {
    live.open(partial, std::ios::trunc);
    if (!live) throw IoFailure("cannot create " + partial);
  }
  CompressOptions opt = base_compress_options();
  if (jobs > 1) opt.threads = 1;
  size_t done = 0;
  const std::vector<CorpusRecord> records = run_corpus(paths, jobs, opt, [&](const CorpusRecord& r) {
    ++done;
    if (live.is_open()) live << record_json(r).dump() << "\n" << std::flush;
    if (r.status == Status::kRoundtripFailed) std::cerr << "FAILED " << r.path << ": " << r.message << "\n";
    if (done % 100 == 0) std::cerr << done << "/" << paths.size() << "\n";
  });
  const CorpusSummary s = summarize(records);
  if (!report.empty()) {
    live.close();
    AtomicFile f(report);
    for (const CorpusRecord& r : records) {
      const std::string line = record_json(r).dump() + "\n";
      f.write(ByteSpan(reinterpret_cast<const uint8_t*>(line.data()), line.size()));
    }
    const std::string line = json{{"summary", summary_json(s)}}.dump() + "\n";
    f.write(ByteSpan(reinterpret_cast<const uint8_t*>(line.data()), line.size()));
    f.commit();
    std::error_code ec;
    fs::remove(partial, ec);
  }
  print_summary(s, std::cout);
  return s.any_failure() ? kCorpusFailure : kOk;
}

class TimingSink : public Sink {
 public:
  using Clock = std::chrono::steady_clock;
  explicit TimingSink(Clock::time_point start) : start_(start) {}
  void write(ByteSpan b) override {
    if (!first_ && !b.empty()) first_ = Clock::now();
    bytes_ += b.size();
  }
  double ttfb() const { return first_ ? std::chrono::duration<double>(*first_ - start_).count() : 0; }
  size_t bytes() const { return bytes_; }

 private:
  Clock::time_point start_;
  std::optional<Clock::time_point> first_;
  size_t bytes_ = 0;
};

int cmd_bench(const std::string& in, int iterations, const std::vector<int>& segment_list, int threads) {
  using Clock = std::chrono::steady_clock;
  const Bytes data = read_all(in);
  const double mb = static_cast<double>(data.size()) / 1e6;
  std::optional<size_t> first_size;
  std::printf("%s: %zu bytes, %d iterations\n", in.c_str(), data.size(), iterations);
  std::printf("segs  ratio    vs first  enc MB/s  dec MB/s  dec Mbps  ttfb p50 ms  ttlb p50 ms  ttlb p99 ms\n");
  for (int segs : segment_list) {
    CompressOptions copt = base_compress_options();
    copt.segments = segs;
    copt.threads = threads;
    std::vector<double> enc;
    CompressionResult r;
    for (int i = 0; i < iterations; ++i) {
      const auto t0 = Clock::now();
      r = compress(data, copt);
      enc.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (r.status != Status::kSuccess) {
        std::cerr << in << ": " << status_name(r.status) << ": " << r.message << "\n";
        return exit_for(r.status);
      }
    }
    DecompressOptions dopt = base_decompress_options();
    dopt.threads = threads;
    std::vector<double> ttfb, ttlb;
    for (int i = 0; i < iterations; ++i) {
      SpanInput input(*r.output);
      const auto t0 = Clock::now();
      TimingSink sink(t0);
      decompress(input, sink, dopt);
      ttlb.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      ttfb.push_back(sink.ttfb());
    }
    if (!first_size) first_size = r.output->size();
    const Spread e = spread_of(enc), fb = spread_of(ttfb), lb = spread_of(ttlb);
    const double delta = 100.0 * (static_cast<double>(r.output->size()) - static_cast<double>(*first_size)) /
                         static_cast<double>(data.size());
    std::printf("%4d  %6.2f%%  %+7.3f%%  %8.2f  %8.2f  %8.1f  %11.2f  %11.2f  %11.2f\n", r.segments,
                100.0 * r.ratio, delta, mb / e.mean, mb / lb.mean, 8 * mb / lb.mean, 1e3 * fb.p50, 1e3 * lb.p50,
                1e3 * lb.p99);
  }
  std::printf("(encode time includes the verifying decode)\n");
  return kOk;
}

int cmd_stats_layout() {
  const ModelLayout& layout = ModelLayout::instance();
  std::printf("%-22s %9s %9s  dims\n", "table", "offset", "bins");
  for (const LayoutEntry& e : layout.describe()) {
    std::string dims;
    for (size_t i = 0; i < e.dims.size(); ++i) dims += (i ? "x" : "") + std::to_string(e.dims[i]);
    std::printf("%-22s %9u %9u  %s\n", e.name.c_str(), e.offset, e.size, dims.c_str());
  }
  std::printf("total bins %u (%zu bytes per segment model)\n", layout.total_bins(),
              layout.total_bins() * sizeof(StatisticBin));
  std::printf("bin state: two 8-bit counts, halved when either reaches 255; p0 scaled to 16 bits\n");
  return kOk;
}

int cmd_stats_files(const std::vector<std::string>& files, bool as_json) {
  int rc = kOk;
  for (const std::string& path : files) {
    const CorpusRecord r = verify_file(path, base_compress_options());
    if (as_json) {
      std::cout << record_json(r).dump() << "\n";
    } else {
      std::printf("%s: %s", path.c_str(), r.io_error ? "IoError" : std::string(status_name(r.status)).c_str());
      if (r.status == Status::kSuccess && !r.io_error) {
        std::printf("  %.2f%%\n", 100 * r.ratio);
        for (int p = 0; p < ComponentBreakdown::kPartCount; ++p) {
          std::printf("  %-7s %10.0f -> %10.0f  %6.2f%%\n", kPartNames[p], r.breakdown.original[p],
                      r.breakdown.coded[p], 100 * r.breakdown.ratio(static_cast<ComponentBreakdown::Part>(p)));
        }
      } else {
        std::printf("\n");
      }
    }
    if (r.io_error) rc = kIoError;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lossless JPEG recompression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(reinterpret_cast<const char*>(this_build_id().data()), 12));

  int segments = 0, threads = 0;
  double timeout = 0;
  std::string chunk_arg;
  std::string in, out, dir, report;
  std::vector<std::string> inputs;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int iterations = 5;
  std::vector<int> segment_list = {1, 2, 4, 8};
  bool as_json = false, layout = false;

  auto* c = app.add_subcommand("compress", "JPEG to container");
  c->add_option("input", in, "JPEG file")->required();
  c->add_option("output", out, "container path; with --chunk-size, chunks go to OUTPUT.0000, .0001, ...")
      ->required();
  c->add_option("--segments", segments, "thread segments, 0 picks by size")->check(CLI::Range(0, 16));
  c->add_option("--chunk-size", chunk_arg, "split into independent chunks of this many bytes (e.g. 4M)");
  c->add_option("--timeout", timeout, "give up after this many seconds")->check(CLI::NonNegativeNumber);
  c->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

  auto* d = app.add_subcommand("decompress", "container(s) to JPEG");
  d->add_option("inputs", inputs, "containers, decoded in order and concatenated")->required();
  d->add_option("-o,--output", out, "JPEG path")->required();
  d->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

  auto* v = app.add_subcommand("verify", "compress, decompress and compare");
  v->add_option("input", in, "JPEG file")->required();
  v->add_option("--segments", segments, "thread segments, 0 picks by size")->check(CLI::Range(0, 16));
  v->add_flag("--json", as_json, "machine-readable report");

  auto* k = app.add_subcommand("corpus", "verify every file under a directory");
  k->add_option("dir", dir, "directory")->required()->check(CLI::ExistingDirectory);
  k->add_option("--jobs", jobs, "files in flight")->check(CLI::PositiveNumber);
  k->add_option("--report", report, "write one JSON record per line, then a summary record");

  auto* b = app.add_subcommand("bench", "encode/decode throughput and latency");
  b->add_option("input", in, "JPEG file")->required();
  b->add_option("--iterations", iterations, "runs per configuration")->check(CLI::PositiveNumber);
  b->add_option("--segments", segment_list, "segment counts to try")->check(CLI::Range(1, 16));
  b->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

  auto* s = app.add_subcommand("stats", "model layout or per-file component breakdown");
  s->add_flag("--layout", layout, "print the statistic bin layout");
  s->add_option("files", inputs, "JPEG files to break down");
  s->add_flag("--json", as_json, "one JSON record per file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c) {
      std::optional<size_t> chunk;
      if (!chunk_arg.empty()) {
        chunk = parse_size(chunk_arg);
        if (!chunk) {
          std::cerr << "bad --chunk-size: " << chunk_arg << "\n";
          return kUsage;
        }
      }
      return cmd_compress(in, out, segments, chunk, timeout, threads);
    }
    if (*d) return cmd_decompress(inputs, out, threads);
    if (*v) return cmd_verify(in, segments, as_json);
    if (*k) return cmd_corpus(dir, jobs, report);
    if (*b) return cmd_bench(in, iterations, segment_list, threads);
    if (*s) {
      if (layout) return cmd_stats_layout();
      if (inputs.empty()) {
        std::cerr << "stats needs --layout or files\n";
        return kUsage;
      }
      return cmd_stats_files(inputs, as_json);
    }
  } catch (const IoFailure& e) {
    std::cerr << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    std::cerr << error_code_name(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::kIo ? kIoError : kBadContainer;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kIoError;
  }
  return kUsage;
}
