#pragma once

// Baseline JPEG parsing and bit-exact Huffman scan decoding/encoding.
//
// A parsed file is split into the verbatim header (SOI up to and including
// the SOS segment), the entropy-coded scan, and whatever follows the scan.
// The scan is turned into quantized coefficient planes plus the side data
// needed to regenerate the original bytes: pad bit, number of RST markers
// actually present, and a resumption point at the start of every MCU row.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lepton {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

inline constexpr int kMaxChannels = 3;

// Natural (row-major) index of the k-th coefficient in JPEG zigzag order.
extern const std::array<uint8_t, 64> kZigzagToNatural;

// 64 quantized coefficients of one 8x8 block. Index = v * 8 + u, where u is
// the horizontal and v the vertical frequency; index 0 is DC.
struct QuantizedBlock {
  std::array<int16_t, 64> coeffs{};

  int16_t& at(int u, int v) { return coeffs[v * 8 + u]; }
  int16_t at(int u, int v) const { return coeffs[v * 8 + u]; }
  int16_t dc() const { return coeffs[0]; }

  friend bool operator==(const QuantizedBlock&, const QuantizedBlock&) = default;
};

enum class CoeffClass : uint8_t {
  kDc,
  kInterior,    // 7x7: u >= 1 and v >= 1
  kRowEdge,     // 7x1: v == 0, u >= 1 (horizontal variation)
  kColumnEdge,  // 1x7: u == 0, v >= 1 (vertical variation)
};

constexpr CoeffClass coeff_class(int natural_index) {
  const int u = natural_index & 7;
  const int v = natural_index >> 3;
  if (u == 0 && v == 0) return CoeffClass::kDc;
  if (v == 0) return CoeffClass::kRowEdge;
  if (u == 0) return CoeffClass::kColumnEdge;
  return CoeffClass::kInterior;
}

struct CoefficientPlane {
  int width_blocks = 0;
  int height_blocks = 0;
  // Blocks per MCU in this scan (1x1 for single-component scans).
  int h_samp = 1;
  int v_samp = 1;
  std::vector<QuantizedBlock> blocks;  // row-major

  QuantizedBlock& block(int bx, int by) {
    return blocks[static_cast<size_t>(by) * width_blocks + bx];
  }
  const QuantizedBlock& block(int bx, int by) const {
    return blocks[static_cast<size_t>(by) * width_blocks + bx];
  }
};

// Resumption state of a Huffman writer at an MCU boundary.
struct HuffmanHandover {
  uint8_t bit_offset = 0;    // bits already occupied in partial_byte, 0..7
  uint8_t partial_byte = 0;  // high bit_offset bits are meaningful
  std::array<int16_t, kMaxChannels> prev_dc{};

  friend bool operator==(const HuffmanHandover&, const HuffmanHandover&) = default;
};

struct HuffmanTable {
  std::array<uint8_t, 16> counts{};  // number of codes of length 1..16
  std::vector<uint8_t> symbols;
  bool defined = false;
};

using QuantTable = std::array<uint16_t, 64>;  // natural order

struct ScanComponent {
  uint8_t id = 0;
  uint8_t frame_index = 0;  // position in SOF; 0 is treated as luma
  uint8_t h = 1, v = 1;     // sampling factors from SOF
  uint8_t quant_index = 0;
  uint8_t dc_table = 0, ac_table = 0;
  int width_blocks = 0;
  int height_blocks = 0;
  int mcu_h = 1, mcu_v = 1;  // blocks per MCU in this scan
};

struct JpegHeader {
  int width = 0;
  int height = 0;
  int frame_components = 0;
  std::vector<ScanComponent> components;  // in scan order
  std::array<QuantTable, 4> quant_tables{};
  std::array<HuffmanTable, 4> dc_tables{};
  std::array<HuffmanTable, 4> ac_tables{};
  int restart_interval = 0;  // MCUs, 0 = none
  int mcu_cols = 0;
  int mcu_rows = 0;
  size_t header_size = 0;  // bytes up to and including SOS

  const QuantTable& quant_for(int channel) const {
    return quant_tables[components[channel].quant_index];
  }
};

// Parses markers from SOI through SOS. Throws Error with a classification
// code (kProgressive, kFourColorCmyk, ...) for inputs outside the supported
// baseline class.
JpegHeader parse_header(ByteSpan bytes);

enum class Verdict {
  kAccept,
  kProgressive,
  kUnsupportedJpeg,
  kNotAnImage,
  kFourColorCmyk,
  kChromaSubsampleBig,
};

// Header-level acceptance check; never decodes the scan.
Verdict classify(ByteSpan bytes);

// Position of the Huffman writer at the start of an MCU row, and where in
// the file the first byte touched by that row lives.
struct RowMark {
  HuffmanHandover handover;
  uint64_t byte_offset = 0;
};

// Original-file bits spent on each coefficient class (Huffman code plus
// extra bits; ZRL and EOB are charged to the position they land on).
struct ScanBitStats {
  uint64_t dc_bits = 0;
  uint64_t interior_bits = 0;
  uint64_t edge_bits = 0;
};

struct ScanDecodeResult {
  std::vector<CoefficientPlane> planes;
  std::vector<RowMark> rows;  // one per MCU row
  uint64_t scan_end = 0;      // offset just past the last entropy-coded byte
  uint32_t rst_count = 0;
  uint8_t pad_bit = 1;
  bool pad_consistent = true;
  bool truncated = false;  // input ended inside the scan
  ScanBitStats bits;
};

ScanDecodeResult decode_scan(const JpegHeader& header, ByteSpan bytes);

struct ParsedJpeg {
  Bytes header_bytes;
  JpegHeader header;
  std::vector<CoefficientPlane> channels;
  std::vector<RowMark> rows;
  uint64_t scan_end = 0;
  uint32_t rst_count = 0;
  uint8_t pad_bit = 1;
  bool pad_consistent = true;
  bool truncated = false;
  Bytes prepend_garbage;
  Bytes scan_trailer;  // between the scan and EOI, normally empty
  bool has_eoi = false;
  Bytes append_garbage;  // after EOI
  uint64_t file_size = 0;
  ScanBitStats bits;

  // Everything the container stores after the regenerated scan.
  Bytes trailer() const;
};

ParsedJpeg parse_jpeg(ByteSpan bytes);

struct ScanEncodeParams {
  uint8_t pad_bit = 1;
  uint32_t rst_count = 0;
};

// Per-channel pointers to the block rows of one MCU row:
// rows[c][k] is the first block of block row (mcu_row * mcu_v + k).
struct McuRowView {
  std::array<std::array<const QuantizedBlock*, 2>, kMaxChannels> rows{};
};

// Resumable baseline Huffman writer. Bytes are emitted only once complete;
// an unfinished trailing byte stays in the handover state.
class HuffmanScanWriter {
 public:
  HuffmanScanWriter(const JpegHeader& header, ScanEncodeParams params,
                    const HuffmanHandover& start, int start_mcu_row);

  void write_mcu_row(const McuRowView& row);
  // Pads the final partial byte; call once after the last MCU row of the
  // image.
  void finish();

  Bytes& output() { return out_; }
  HuffmanHandover handover() const;
  int next_mcu_row() const { return mcu_row_; }

 private:
  struct Code {
    uint16_t bits = 0;
    uint8_t length = 0;
  };
  struct Codebook {
    std::array<Code, 256> codes{};
  };

  void put_bits(uint32_t bits, int length);
  void flush_bytes();
  void pad_to_byte();
  void encode_block(const QuantizedBlock& block, int channel);
  void restart_marker(uint32_t index);

  const JpegHeader& header_;
  ScanEncodeParams params_;
  std::array<Codebook, 4> dc_books_{};
  std::array<Codebook, 4> ac_books_{};
  std::array<int16_t, kMaxChannels> prev_dc_{};
  uint64_t acc_ = 0;
  int nbits_ = 0;
  int mcu_row_ = 0;
  Bytes out_;
};

// Encodes MCU rows [first_row, end_row) of the planes, starting from the
// given handover. When end_row is the last row the final byte is padded.
Bytes encode_scan(const JpegHeader& header,
                  const std::vector<CoefficientPlane>& planes,
                  ScanEncodeParams params, const HuffmanHandover& handover,
                  int first_row, int end_row);

}  // namespace lepton
