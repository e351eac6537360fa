#pragma once

// End-to-end compression and decompression.
//
// A container covers a byte window of the original JPEG. The MCU rows that
// produce those bytes are split into thread segments; each segment has its
// own model and coded stream and starts from the Huffman writer state
// recorded at its first row, so segments encode and decode independently.

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lepton/coeff_model.h"
#include "lepton/container.h"
#include "lepton/error.h"
#include "lepton/jpeg_codec.h"

namespace lepton {

enum class Status {
  kSuccess,
  kProgressive,
  kUnsupportedJpeg,
  kNotAnImage,
  kFourColorCmyk,
  kMemLimitDecode,
  kMemLimitEncode,
  kChromaSubsampleBig,
  kAcValuesOutOfRange,
  kRoundtripFailed,
  kTimeout,
};

std::string_view status_name(Status s);
Status status_from_error(ErrorCode code);

inline constexpr size_t kDefaultMemLimitEncode = size_t{178} << 20;
inline constexpr size_t kDefaultMemLimitDecode = size_t{24} << 20;
inline constexpr size_t kDefaultChunkSize = size_t{4} << 20;
inline constexpr size_t kMinChunkSize = size_t{64} << 10;

// Segment count for a given amount of scan data.
int default_segment_count(uint64_t scan_bytes);

struct CompressOptions {
  int segments = 0;  // 0: pick by scan size
  int threads = 0;   // 0: one per hardware thread
  size_t mem_limit_encode = kDefaultMemLimitEncode;
  double timeout_seconds = 0;  // 0: none
  bool collect_costs = false;  // fill CompressionResult::breakdown
};

struct DecompressOptions {
  int threads = 0;
  size_t mem_limit_decode = kDefaultMemLimitDecode;
};

// Original versus coded bytes per part of the file. Coded sizes of the
// model-coded parts split the stream bytes in proportion to their ideal
// code lengths.
struct ComponentBreakdown {
  enum Part { kHeader, kInterior, kEdge, kDc, kPartCount };
  std::array<double, kPartCount> original{};
  std::array<double, kPartCount> coded{};

  double ratio(Part p) const { return original[p] > 0 ? coded[p] / original[p] : 0; }
  void add(const ComponentBreakdown& o);
};

struct CompressionResult {
  Status status = Status::kSuccess;
  std::optional<Bytes> output;
  double ratio = 0;
  std::string message;
  ComponentBreakdown breakdown;
  int segments = 0;
};

CompressionResult compress(ByteSpan jpeg, const CompressOptions& options = {});

class Sink {
 public:
  virtual ~Sink() = default;
  virtual void write(ByteSpan bytes) = 0;
};

class VectorSink : public Sink {
 public:
  void write(ByteSpan bytes) override { data.insert(data.end(), bytes.begin(), bytes.end()); }
  Bytes data;
};

struct DecodeStats {
  uint64_t input_at_first_output = 0;  // container bytes read before the first sink write
  uint64_t input_total = 0;
  uint64_t output_total = 0;
  // Most block rows of coefficients held at once for any channel.
  int coefficient_rows_high_water = 0;
  size_t peak_buffered_output = 0;
};

// Streams the reconstructed bytes into `sink`. Throws Error.
void decompress(Input& in, Sink& sink, const DecompressOptions& options = {}, DecodeStats* stats = nullptr);
Bytes decompress(ByteSpan container, const DecompressOptions& options = {});

struct ChunkedResult {
  Status status = Status::kSuccess;
  std::string message;
  std::vector<Bytes> containers;
  std::vector<uint64_t> boundaries;  // start offset of each chunk, then the file size
};

// Chunks end at the given offsets (strictly increasing, last = file size).
ChunkedResult compress_chunks(ByteSpan jpeg, const std::vector<uint64_t>& chunk_ends,
                              const CompressOptions& options = {});
ChunkedResult compress_chunked(ByteSpan jpeg, size_t chunk_size = kDefaultChunkSize,
                               const CompressOptions& options = {});
Bytes decompress_chunk(ByteSpan container, const DecompressOptions& options = {});

struct VerifyReport {
  Status status = Status::kSuccess;
  std::string message;
  uint64_t input_size = 0;
  uint64_t output_size = 0;  // default configuration
  uint64_t output_size_single = 0;
  double ratio = 0;
  int segments = 0;
  ComponentBreakdown breakdown;
  double encode_seconds = 0;
  double decode_seconds = 0;
};

VerifyReport verify(ByteSpan jpeg, const CompressOptions& options = {});

// Model-only measurement: codes every segment with the given model variant
// and reports ideal coded sizes per part, without writing a container.
// Containers always use the default model.
ComponentBreakdown analyze(ByteSpan jpeg, const ModelOptions& model, int segments = 0);

}  // namespace lepton
