#include "lepton/pipeline.h"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "segment_codec.h"

namespace lepton {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// Runs fn(i) for i in [0, n) on up to `threads` threads; the first
// exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  const size_t workers = std::min(n, static_cast<size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto body = [&] {
    for (size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> l(m);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Encoding

struct WindowPlan {
  uint64_t begin = 0, end = 0;  // file byte window
  int first_row = 0, end_row = 0;
  uint64_t stream_offset = 0;
  std::vector<int> starts;  // segment start rows
};

uint64_t row_offset(const ParsedJpeg& p, int row) {
  return row < p.header.mcu_rows ? p.rows[static_cast<size_t>(row)].byte_offset : p.scan_end;
}

WindowPlan plan_window(const ParsedJpeg& p, uint64_t begin, uint64_t end, int segments) {
  const int mcu_rows = p.header.mcu_rows;
  if (static_cast<int>(p.rows.size()) != mcu_rows || mcu_rows == 0) fail(ErrorCode::kInternal, "row marks missing");
  WindowPlan w;
  w.begin = begin;
  w.end = end;
  // Last row whose first byte is at or before the window start.
  w.first_row = 0;
  while (w.first_row + 1 < mcu_rows && row_offset(p, w.first_row + 1) <= begin) ++w.first_row;
  // First later row starting at or after the window end.
  w.end_row = w.first_row + 1;
  while (w.end_row < mcu_rows && row_offset(p, w.end_row) < end) ++w.end_row;
  w.stream_offset = w.first_row == 0 ? 0 : row_offset(p, w.first_row);

  const int rows = w.end_row - w.first_row;
  if (segments <= 0) segments = default_segment_count(row_offset(p, w.end_row) - row_offset(p, w.first_row));
  segments = std::clamp(segments, 1, std::min(rows, kMaxSegments));
  for (int i = 0; i < segments; ++i) w.starts.push_back(w.first_row + rows * i / segments);
  return w;
}

struct EncodedWindow {
  Bytes container;
  uint64_t stream_bytes = 0;
  CostAccumulator costs;
};

EncodedWindow encode_window(const ParsedJpeg& p, const WindowPlan& w, const ModelOptions& model, int threads,
                            bool collect_costs, const Deadline& deadline) {
  const size_t nseg = w.starts.size();
  std::vector<Bytes> streams(nseg);
  std::vector<CostAccumulator> costs(nseg);
  parallel_for(nseg, threads, [&](size_t i) {
    const int end = i + 1 < nseg ? w.starts[i + 1] : w.end_row;
    streams[i] = encode_segment(p.header, p.channels, w.starts[i], end, model,
                                collect_costs ? &costs[i] : nullptr, deadline);
  });

  Container c;
  c.header.build_id = this_build_id();
  c.header.output_size = static_cast<uint32_t>(w.end - w.begin);
  HeaderSection& s = c.section;
  s.jpeg_header = p.header_bytes;
  s.pad_bit = p.pad_bit;
  s.rst_count = p.rst_count;
  for (const CoefficientPlane& plane : p.channels) {
    s.blocks_per_channel.push_back(static_cast<uint32_t>(plane.blocks.size()));
  }
  if (w.end_row == p.header.mcu_rows) s.append = p.trailer();
  s.window_offset = static_cast<uint32_t>(w.begin);
  s.stream_offset = static_cast<uint32_t>(w.stream_offset);
  s.end_row = static_cast<uint16_t>(w.end_row);
  for (size_t i = 0; i < nseg; ++i) {
    const int end = i + 1 < nseg ? w.starts[i + 1] : w.end_row;
    SegmentInfo info;
    info.start_row = static_cast<uint16_t>(w.starts[i]);
    info.handover = p.rows[static_cast<size_t>(w.starts[i])].handover;
    info.output_size = static_cast<uint32_t>(row_offset(p, end) - row_offset(p, w.starts[i]));
    s.segments.push_back(info);
  }
  c.streams = std::move(streams);

  EncodedWindow out;
  for (const Bytes& b : c.streams) out.stream_bytes += b.size();
  for (const CostAccumulator& a : costs) {
    for (size_t k = 0; k < a.bits.size(); ++k) out.costs.bits[k] += a.bits[k];
  }
  out.container = write_container(c);
  return out;
}

void check_limits(uint64_t size) {
  if (size > 0xFFFFFFFFu) fail(ErrorCode::kSizeOverflow, "input larger than 4 GiB");
}

void check_encode_memory(const JpegHeader& h, size_t input_size, size_t limit) {
  size_t blocks = 0;
  for (const ScanComponent& sc : h.components) {
    blocks += static_cast<size_t>(sc.width_blocks) * static_cast<size_t>(sc.height_blocks);
  }
  if (blocks * sizeof(QuantizedBlock) + input_size > limit) {
    fail(ErrorCode::kMemLimitEncode, "coefficient planes exceed the encode memory limit");
  }
}

ParsedJpeg parse_checked(ByteSpan jpeg, const CompressOptions& options) {
  check_limits(jpeg.size());
  switch (classify(jpeg)) {
    case Verdict::kAccept: break;
    case Verdict::kProgressive: fail(ErrorCode::kProgressive, "progressive JPEG");
    case Verdict::kUnsupportedJpeg: fail(ErrorCode::kUnsupportedJpeg, "unsupported JPEG");
    case Verdict::kNotAnImage: fail(ErrorCode::kNotAnImage, "not an image");
    case Verdict::kFourColorCmyk: fail(ErrorCode::kFourColorCmyk, "four-component JPEG");
    case Verdict::kChromaSubsampleBig: fail(ErrorCode::kChromaSubsampleBig, "subsampling above 2x2");
  }
  check_encode_memory(parse_header(jpeg), jpeg.size(), options.mem_limit_encode);
  ParsedJpeg p = parse_jpeg(jpeg);
  if (p.header.mcu_rows > 0xFFFF) fail(ErrorCode::kUnsupportedJpeg, "too many MCU rows");
  if (!p.pad_consistent) fail(ErrorCode::kInternal, "inconsistent pad bits");
  return p;
}

ComponentBreakdown breakdown_of(const ParsedJpeg& p, uint64_t container_size, uint64_t stream_bytes,
                                const CostAccumulator& costs) {
  ComponentBreakdown b;
  b.original[ComponentBreakdown::kHeader] = static_cast<double>(p.header_bytes.size() + p.trailer().size());
  b.original[ComponentBreakdown::kInterior] = p.bits.interior_bits / 8.0;
  b.original[ComponentBreakdown::kEdge] = p.bits.edge_bits / 8.0;
  b.original[ComponentBreakdown::kDc] = p.bits.dc_bits / 8.0;
  b.coded[ComponentBreakdown::kHeader] = static_cast<double>(container_size - stream_bytes);
  double total = 0;
  for (double x : costs.bits) total += x;
  if (total > 0) {
    auto share = [&](CostComponent c) {
      return static_cast<double>(stream_bytes) * costs.bits[static_cast<int>(c)] / total;
    };
    b.coded[ComponentBreakdown::kInterior] = share(CostComponent::kInterior);
    b.coded[ComponentBreakdown::kEdge] = share(CostComponent::kEdge);
    b.coded[ComponentBreakdown::kDc] = share(CostComponent::kDc);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Decoding

class CountingInput : public Input {
 public:
  explicit CountingInput(Input& in) : in_(in) {}
  size_t read(uint8_t* dst, size_t n) override {
    const size_t k = in_.read(dst, n);
    count_ += k;
    return k;
  }
  uint64_t count() const { return count_; }

 private:
  Input& in_;
  std::atomic<uint64_t> count_{0};
};

// Hands out section payloads per segment, reading the container lazily.
class SectionPump {
 public:
  SectionPump(ContainerReader& reader, size_t segments) : reader_(reader), queues_(segments) {}

  bool pull(size_t segment, Bytes& out) {
    std::lock_guard<std::mutex> l(m_);
    while (queues_[segment].empty()) {
      if (eof_) return false;
      CodedSection s;
      if (!reader_.next_section(s)) {
        eof_ = true;
        continue;
      }
      queues_[s.segment].push_back(std::move(s.payload));
    }
    out = std::move(queues_[segment].front());
    queues_[segment].pop_front();
    return true;
  }

  // True if any coded data is left over once every segment is done.
  bool leftovers() {
    std::lock_guard<std::mutex> l(m_);
    for (const auto& q : queues_) {
      if (!q.empty()) return true;
    }
    CodedSection s;
    return !eof_ && reader_.next_section(s);
  }

 private:
  std::mutex m_;
  ContainerReader& reader_;
  std::vector<std::deque<Bytes>> queues_;
  bool eof_ = false;
};

class SegmentSource : public ByteSource {
 public:
  SegmentSource(SectionPump& pump, size_t segment) : pump_(pump), segment_(segment) {}
  bool next(uint8_t& b) override {
    while (pos_ == buf_.size()) {
      if (!pump_.pull(segment_, buf_)) {
        dry_ = true;
        return false;
      }
      pos_ = 0;
    }
    b = buf_[pos_++];
    return true;
  }
  bool dry() const { return dry_; }

 private:
  SectionPump& pump_;
  size_t segment_;
  Bytes buf_;
  size_t pos_ = 0;
  bool dry_ = false;
};

// Cuts the regenerated stream down to the container's window.
class WindowFilter {
 public:
  WindowFilter(Sink& sink, uint64_t stream_offset, uint64_t begin, uint64_t size, CountingInput& in,
               DecodeStats* stats)
      : sink_(sink), pos_(stream_offset), begin_(begin), end_(begin + size), in_(in), stats_(stats) {}

  void put(ByteSpan b) {
    const uint64_t lo = std::max(pos_, begin_);
    const uint64_t hi = std::min(pos_ + b.size(), end_);
    if (lo < hi) {
      if (written_ == 0 && stats_) stats_->input_at_first_output = in_.count();
      sink_.write(b.subspan(lo - pos_, hi - lo));
      written_ += hi - lo;
    }
    pos_ += b.size();
  }
  uint64_t written() const { return written_; }

 private:
  Sink& sink_;
  uint64_t pos_;
  uint64_t begin_, end_;
  uint64_t written_ = 0;
  CountingInput& in_;
  DecodeStats* stats_;
};

// Releases segment outputs in segment order. Segments that are not at the
// head buffer their bytes; when the buffer budget is spent they wait until
// they reach the head.
class Assembler {
 public:
  Assembler(WindowFilter& out, size_t segments, size_t budget)
      : out_(out), pending_(segments), done_(segments, false), budget_(budget) {}

  void emit(size_t seg, ByteSpan b) {
    std::unique_lock<std::mutex> l(m_);
    cv_.wait(l, [&] { return aborted_ || seg == head_ || buffered_ + b.size() <= budget_; });
    if (aborted_) fail(ErrorCode::kInternal, "aborted");
    if (seg == head_) {
      out_.put(b);
    } else {
      pending_[seg].insert(pending_[seg].end(), b.begin(), b.end());
      buffered_ += b.size();
      peak_ = std::max(peak_, buffered_);
    }
  }

  void finish(size_t seg) {
    std::lock_guard<std::mutex> l(m_);
    done_[seg] = true;
    while (head_ < done_.size() && done_[head_]) {
      ++head_;
      if (head_ < done_.size()) {
        out_.put(pending_[head_]);
        buffered_ -= pending_[head_].size();
        Bytes().swap(pending_[head_]);
      }
    }
    cv_.notify_all();
  }

  void abort() {
    std::lock_guard<std::mutex> l(m_);
    aborted_ = true;
    cv_.notify_all();
  }

  size_t peak() const { return peak_; }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  WindowFilter& out_;
  std::vector<Bytes> pending_;
  std::vector<bool> done_;
  size_t head_ = 0;
  size_t buffered_ = 0;
  size_t peak_ = 0;
  size_t budget_;
  bool aborted_ = false;
};

JpegHeader header_from_section(const HeaderSection& s) {
  JpegHeader h;
  try {
    h = parse_header(s.jpeg_header);
  } catch (const Error&) {
    fail(ErrorCode::kCorruptHeader, "stored JPEG header does not parse");
  }
  if (h.components.size() != s.blocks_per_channel.size()) fail(ErrorCode::kCorruptHeader, "channel count mismatch");
  for (size_t c = 0; c < h.components.size(); ++c) {
    const uint64_t n = static_cast<uint64_t>(h.components[c].width_blocks) * h.components[c].height_blocks;
    if (n != s.blocks_per_channel[c]) fail(ErrorCode::kCorruptHeader, "block count mismatch");
  }
  if (s.end_row == 0 || s.end_row > h.mcu_rows) fail(ErrorCode::kCorruptHeader, "bad row range");
  int prev = -1;
  for (const SegmentInfo& seg : s.segments) {
    if (seg.start_row <= prev || seg.start_row >= s.end_row) fail(ErrorCode::kCorruptHeader, "bad segment rows");
    prev = seg.start_row;
  }
  if (s.stream_offset == 0 && s.segments.front().start_row != 0) fail(ErrorCode::kCorruptHeader, "bad stream offset");
  if (s.window_offset < s.stream_offset) fail(ErrorCode::kCorruptHeader, "window before stream");
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view status_name(Status s) {
  switch (s) {
    case Status::kSuccess: return "Success";
    case Status::kProgressive: return "Progressive";
    case Status::kUnsupportedJpeg: return "UnsupportedJpeg";
    case Status::kNotAnImage: return "NotAnImage";
    case Status::kFourColorCmyk: return "FourColorCmyk";
    case Status::kMemLimitDecode: return "MemLimitDecode";
    case Status::kMemLimitEncode: return "MemLimitEncode";
    case Status::kChromaSubsampleBig: return "ChromaSubsampleBig";
    case Status::kAcValuesOutOfRange: return "AcValuesOutOfRange";
    case Status::kRoundtripFailed: return "RoundtripFailed";
    case Status::kTimeout: return "Timeout";
  }
  return "Unknown";
}

Status status_from_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kProgressive: return Status::kProgressive;
    case ErrorCode::kUnsupportedJpeg:
    case ErrorCode::kTruncatedScan:
    case ErrorCode::kSizeOverflow: return Status::kUnsupportedJpeg;
    case ErrorCode::kNotAnImage: return Status::kNotAnImage;
    case ErrorCode::kFourColorCmyk: return Status::kFourColorCmyk;
    case ErrorCode::kChromaSubsampleBig: return Status::kChromaSubsampleBig;
    case ErrorCode::kAcValuesOutOfRange: return Status::kAcValuesOutOfRange;
    case ErrorCode::kMemLimitDecode: return Status::kMemLimitDecode;
    case ErrorCode::kMemLimitEncode: return Status::kMemLimitEncode;
    case ErrorCode::kTimeout: return Status::kTimeout;
    default: return Status::kRoundtripFailed;
  }
}

int default_segment_count(uint64_t scan_bytes) {
  if (scan_bytes < (128u << 10)) return 1;
  if (scan_bytes < (512u << 10)) return 2;
  if (scan_bytes < (2u << 20)) return 4;
  return 8;
}

void ComponentBreakdown::add(const ComponentBreakdown& o) {
  for (int i = 0; i < kPartCount; ++i) {
    original[i] += o.original[i];
    coded[i] += o.coded[i];
  }
}

void decompress(Input& raw_in, Sink& sink, const DecompressOptions& options, DecodeStats* stats) {
  CountingInput in(raw_in);
  ContainerReader reader(in);
  const HeaderSection& s = reader.section();
  const JpegHeader h = header_from_section(s);
  const size_t nseg = s.segments.size();

  // Fixed costs are the rings; per-segment models come on top of the limit.
  const size_t fixed = nseg * segment_decoder_bytes(h);
  if (fixed > options.mem_limit_decode) fail(ErrorCode::kMemLimitDecode, "segment decoders exceed the memory limit");
  const size_t budget = options.mem_limit_decode - fixed;

  WindowFilter filter(sink, s.stream_offset, s.window_offset, reader.header().output_size, in, stats);
  if (s.stream_offset == 0) {
    filter.put(s.prepend);
    filter.put(s.jpeg_header);
  }
  SectionPump pump(reader, nseg);
  Assembler assembler(filter, nseg, budget);
  std::atomic<bool> abort{false};
  std::vector<int> high_water(nseg, 0);
  std::mutex error_mutex;
  std::exception_ptr first_error;

  parallel_for(nseg, std::min(resolve_threads(options.threads), static_cast<int>(nseg)), [&](size_t i) {
    const SegmentInfo& info = s.segments[i];
    SegmentDecodeParams params;
    params.start = info.start_row;
    params.end = i + 1 < nseg ? s.segments[i + 1].start_row : s.end_row;
    params.handover = info.handover;
    params.scan = {s.pad_bit, s.rst_count};
    params.finish = params.end == h.mcu_rows;
    SegmentSource src(pump, i);
    try {
      const uint64_t produced = decode_segment(
          h, params, src, [&](ByteSpan b) { assembler.emit(i, b); }, abort, &high_water[i]);
      if (produced != info.output_size) fail(ErrorCode::kCorruptStream, "segment output size mismatch");
    } catch (...) {
      // Workers stopped by someone else's failure report nothing.
      if (!abort.exchange(true)) {
        std::exception_ptr err = std::current_exception();
        try {
          throw;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kUnexpectedEndOfStream && src.dry()) {
            err = std::make_exception_ptr(Error(ErrorCode::kTruncatedContainer, "coded data ends early"));
          }
        } catch (...) {
        }
        std::lock_guard<std::mutex> l(error_mutex);
        first_error = err;
      }
      assembler.abort();
      return;
    }
    assembler.finish(i);
  });
  if (first_error) std::rethrow_exception(first_error);

  if (s.end_row == h.mcu_rows) filter.put(s.append);
  if (pump.leftovers()) fail(ErrorCode::kCorruptStream, "coded data after the last segment");
  if (filter.written() != reader.header().output_size) fail(ErrorCode::kCorruptStream, "output size mismatch");
  if (stats) {
    stats->input_total = in.count();
    stats->output_total = filter.written();
    stats->coefficient_rows_high_water = *std::max_element(high_water.begin(), high_water.end());
    stats->peak_buffered_output = assembler.peak();
  }
}

Bytes decompress(ByteSpan container, const DecompressOptions& options) {
  SpanInput in(container);
  VectorSink sink;
  decompress(in, sink, options);
  return std::move(sink.data);
}

Bytes decompress_chunk(ByteSpan container, const DecompressOptions& options) {
  return decompress(container, options);
}

CompressionResult compress(ByteSpan jpeg, const CompressOptions& options) {
  CompressionResult r;
  try {
    const Deadline deadline(options.timeout_seconds);
    const ParsedJpeg p = parse_checked(jpeg, options);
    deadline.check();
    const WindowPlan w = plan_window(p, 0, jpeg.size(), options.segments);
    EncodedWindow enc = encode_window(p, w, ModelOptions{}, resolve_threads(options.threads),
                                      options.collect_costs, deadline);
    r.segments = static_cast<int>(w.starts.size());
    DecompressOptions dopt;
    dopt.threads = options.threads;
    dopt.mem_limit_decode = std::numeric_limits<size_t>::max();
    Bytes back;
    try {
      back = decompress(enc.container, dopt);
    } catch (const Error& e) {
      fail(ErrorCode::kInternal, std::string("verification decode failed: ") + e.what());
    }
    if (!std::equal(back.begin(), back.end(), jpeg.begin(), jpeg.end())) {
      fail(ErrorCode::kInternal, "verification decode differs from input");
    }
    if (options.collect_costs) r.breakdown = breakdown_of(p, enc.container.size(), enc.stream_bytes, enc.costs);
    r.ratio = jpeg.empty() ? 0 : static_cast<double>(enc.container.size()) / static_cast<double>(jpeg.size());
    r.output = std::move(enc.container);
  } catch (const Error& e) {
    r.status = status_from_error(e.code());
    r.message = e.what();
    r.output.reset();
  }
  return r;
}

ChunkedResult compress_chunks(ByteSpan jpeg, const std::vector<uint64_t>& chunk_ends, const CompressOptions& options) {
  ChunkedResult r;
  try {
    if (chunk_ends.empty() || chunk_ends.back() != jpeg.size()) fail(ErrorCode::kInternal, "chunks must cover the file");
    const Deadline deadline(options.timeout_seconds);
    const ParsedJpeg p = parse_checked(jpeg, options);
    uint64_t begin = 0;
    r.boundaries.push_back(0);
    for (uint64_t end : chunk_ends) {
      if (end <= begin) fail(ErrorCode::kInternal, "chunk ends must increase");
      const WindowPlan w = plan_window(p, begin, end, options.segments);
      EncodedWindow enc = encode_window(p, w, ModelOptions{}, resolve_threads(options.threads), false, deadline);
      DecompressOptions dopt;
      dopt.threads = options.threads;
      dopt.mem_limit_decode = std::numeric_limits<size_t>::max();
      Bytes back;
      try {
        back = decompress(enc.container, dopt);
      } catch (const Error& e) {
        fail(ErrorCode::kInternal, std::string("chunk verification decode failed: ") + e.what());
      }
      if (!std::equal(back.begin(), back.end(), jpeg.begin() + static_cast<ptrdiff_t>(begin),
                      jpeg.begin() + static_cast<ptrdiff_t>(end))) {
        fail(ErrorCode::kInternal, "chunk verification differs from input");
      }
      r.containers.push_back(std::move(enc.container));
      r.boundaries.push_back(end);
      begin = end;
    }
  } catch (const Error& e) {
    r.status = status_from_error(e.code());
    r.message = e.what();
    r.containers.clear();
  }
  return r;
}

ChunkedResult compress_chunked(ByteSpan jpeg, size_t chunk_size, const CompressOptions& options) {
  if (chunk_size < kMinChunkSize) fail(ErrorCode::kInternal, "chunk size below 64 KiB");
  std::vector<uint64_t> ends;
  for (uint64_t e = chunk_size; e < jpeg.size(); e += chunk_size) ends.push_back(e);
  ends.push_back(jpeg.size());
  return compress_chunks(jpeg, ends, options);
}

VerifyReport verify(ByteSpan jpeg, const CompressOptions& options) {
  VerifyReport rep;
  rep.input_size = jpeg.size();
  CompressOptions opt = options;
  opt.collect_costs = true;
  auto t0 = Clock::now();
  CompressionResult a = compress(jpeg, opt);
  rep.encode_seconds = seconds_since(t0);
  rep.status = a.status;
  rep.message = a.message;
  if (a.status != Status::kSuccess) return rep;
  rep.output_size = a.output->size();
  rep.ratio = a.ratio;
  rep.segments = a.segments;
  rep.breakdown = a.breakdown;

  CompressOptions single = options;
  single.segments = 1;
  CompressionResult b = compress(jpeg, single);
  if (b.status != Status::kSuccess) {
    rep.status = b.status;
    rep.message = "single-segment configuration: " + b.message;
    return rep;
  }
  rep.output_size_single = b.output->size();
  try {
    t0 = Clock::now();
    const Bytes back_a = decompress(*a.output);
    rep.decode_seconds = seconds_since(t0);
    const Bytes back_b = decompress(*b.output);
    if (!std::equal(back_a.begin(), back_a.end(), jpeg.begin(), jpeg.end()) ||
        !std::equal(back_b.begin(), back_b.end(), jpeg.begin(), jpeg.end())) {
      rep.status = Status::kRoundtripFailed;
      rep.message = "decoded bytes differ";
    }
  } catch (const Error& e) {
    rep.status = Status::kRoundtripFailed;
    rep.message = e.what();
  }
  return rep;
}

ComponentBreakdown analyze(ByteSpan jpeg, const ModelOptions& model, int segments) {
  const ParsedJpeg p = parse_checked(jpeg, CompressOptions{});
  const WindowPlan w = plan_window(p, 0, jpeg.size(), segments);
  CostAccumulator total;
  const size_t nseg = w.starts.size();
  for (size_t i = 0; i < nseg; ++i) {
    const int end = i + 1 < nseg ? w.starts[i + 1] : w.end_row;
    encode_segment(p.header, p.channels, w.starts[i], end, model, &total, Deadline{});
  }
  ComponentBreakdown b = breakdown_of(p, 0, 0, total);
  // Ideal code lengths, in bytes.
  b.coded[ComponentBreakdown::kHeader] = 0;
  b.coded[ComponentBreakdown::kInterior] = total.bits[static_cast<int>(CostComponent::kInterior)] / 8;
  b.coded[ComponentBreakdown::kEdge] = total.bits[static_cast<int>(CostComponent::kEdge)] / 8;
  b.coded[ComponentBreakdown::kDc] = total.bits[static_cast<int>(CostComponent::kDc)] / 8;
  return b;
}

}  // namespace lepton
