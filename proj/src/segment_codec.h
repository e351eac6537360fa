#pragma once

// Model coding of one thread segment: a range of MCU rows coded with a
// fresh BinGrid. Neighbour context comes from a two-row ring per channel,
// and the first block row of a segment has no block above.

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "lepton/coeff_model.h"
#include "lepton/container.h"
#include "lepton/jpeg_codec.h"
#include "lepton/range_coder.h"

namespace lepton {

class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(double seconds);
  void check() const;

 private:
  std::optional<std::chrono::steady_clock::time_point> at_;
};

ChannelKind channel_kind(const JpegHeader& h, size_t channel);

// Encodes MCU rows [start, end). Costs, if given, are accumulated.
Bytes encode_segment(const JpegHeader& h, const std::vector<CoefficientPlane>& planes, int start, int end,
                     const ModelOptions& model, CostAccumulator* cost, const Deadline& deadline);

// Bytes one segment decoder allocates up front: its coefficient rings and
// its statistic bins.
size_t segment_decoder_bytes(const JpegHeader& h);

struct SegmentDecodeParams {
  int start = 0;
  int end = 0;
  HuffmanHandover handover;
  ScanEncodeParams scan;
  bool finish = false;  // segment ends the scan: pad the last byte
};

// Decodes a segment and regenerates its Huffman bytes, handing them to
// `emit` after every MCU row. Returns the number of bytes emitted.
// `rows_high_water` receives the most block rows held for one channel.
uint64_t decode_segment(const JpegHeader& h, const SegmentDecodeParams& params, ByteSource& src,
                        const std::function<void(ByteSpan)>& emit, const std::atomic<bool>& abort,
                        int* rows_high_water);

}  // namespace lepton
