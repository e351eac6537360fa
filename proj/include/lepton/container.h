#pragma once

// Container format v1 (layout with byte offsets in docs/format.md).
//
//   28-byte fixed header | zlib header section | coded sections ...
//
// Coded sections carry pieces of the per-segment arithmetic-coded streams;
// pieces of different segments are interleaved, pieces of one segment stay
// in stream order.

#include <array>
#include <cstdint>
#include <vector>

#include "lepton/jpeg_codec.h"

namespace lepton {

inline constexpr uint8_t kMagic0 = 0xCF;
inline constexpr uint8_t kMagic1 = 0x84;
inline constexpr uint8_t kFormatVersion = 0x01;
inline constexpr size_t kFixedHeaderSize = 28;
inline constexpr int kMaxSegments = 16;
inline constexpr size_t kSectionSize = 4096;

using BuildId = std::array<uint8_t, 12>;

// Identifier compiled into this build (git revision, zero padded).
BuildId this_build_id();

struct ContainerHeader {
  uint8_t header_flag = 'Y';
  uint32_t num_segments = 0;
  BuildId build_id{};
  uint32_t output_size = 0;  // bytes this container decodes to
  uint32_t zlib_size = 0;

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct SegmentInfo {
  uint16_t start_row = 0;     // first MCU row; the next segment's start ends it
  uint32_t output_size = 0;   // scan bytes completed by this segment
  HuffmanHandover handover;   // writer state at start_row

  friend bool operator==(const SegmentInfo&, const SegmentInfo&) = default;
};

uint16_t pack_handover_word(const HuffmanHandover& h);
void unpack_handover_word(uint16_t word, HuffmanHandover& h);

struct HeaderSection {
  Bytes jpeg_header;
  uint8_t pad_bit = 1;  // stored as 0x00 / 0xFF
  std::vector<SegmentInfo> segments;
  uint32_t rst_count = 0;
  std::vector<uint32_t> blocks_per_channel;
  Bytes prepend;
  Bytes append;
  // Window of the original file this container reproduces. The regenerated
  // stream starts at file offset stream_offset (0 when it includes the
  // JPEG header) and output begins at window_offset. end_row is one past
  // the last MCU row coded.
  uint32_t window_offset = 0;
  uint32_t stream_offset = 0;
  uint16_t end_row = 0;

  friend bool operator==(const HeaderSection&, const HeaderSection&) = default;
};

// Uncompressed little-endian layout, and the same wrapped in zlib.
Bytes serialize_header_section(const HeaderSection& h);
HeaderSection parse_header_section(ByteSpan raw);
Bytes compress_header(const HeaderSection& h);
HeaderSection decompress_header(ByteSpan zlib_data);

struct Container {
  ContainerHeader header;
  HeaderSection section;
  std::vector<Bytes> streams;  // one per segment

  friend bool operator==(const Container&, const Container&) = default;
};

// One coded section: segment id plus payload.
struct CodedSection {
  uint8_t segment = 0;
  Bytes payload;
};

// Splits streams into sections and orders them round-robin by segment.
std::vector<CodedSection> interleave(const std::vector<Bytes>& streams);
void append_section(Bytes& out, const CodedSection& s);

// num_segments and zlib_size are derived; everything else is taken as is.
Bytes write_container(const Container& c);
Container read_container(ByteSpan bytes);

// Pull-style byte input. read() returns fewer than n bytes only at the end.
class Input {
 public:
  virtual ~Input() = default;
  virtual size_t read(uint8_t* dst, size_t n) = 0;
};

class SpanInput : public Input {
 public:
  explicit SpanInput(ByteSpan data) : data_(data) {}
  size_t read(uint8_t* dst, size_t n) override;
  size_t consumed() const { return pos_; }

 private:
  ByteSpan data_;
  size_t pos_ = 0;
};

// Incremental reader: the preamble first, then sections on demand.
class ContainerReader {
 public:
  explicit ContainerReader(Input& in);

  const ContainerHeader& header() const { return header_; }
  const HeaderSection& section() const { return section_; }

  // False on a clean end of input (between sections).
  bool next_section(CodedSection& out);

 private:
  void read_exact(uint8_t* dst, size_t n);

  Input& in_;
  ContainerHeader header_;
  HeaderSection section_;
};

// Per-segment FIFO of stream bytes filled from sections in any order.
class Demuxer {
 public:
  explicit Demuxer(size_t segments) : queues_(segments) {}
  void push(const CodedSection& s);
  std::vector<Bytes> take_all();

 private:
  std::vector<Bytes> queues_;
};

}  // namespace lepton
