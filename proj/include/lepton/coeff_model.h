#pragma once

// Context model for quantized DCT blocks. Every coded bit goes through the
// range coder with a statistic bin chosen from already-coded neighbours
// (above, left, above-left) and earlier parts of the same block.
//
// Per block the order is: number of nonzero 7x7 coefficients, the 7x7
// coefficients, for each edge (row, column) its nonzero count and values,
// and finally the DC prediction error.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lepton/jpeg_codec.h"
#include "lepton/range_coder.h"

namespace lepton {

enum class ChannelKind : uint8_t { kLuma = 0, kChroma = 1 };

enum class DcMode : uint8_t { kGradient, kMedianFirstCut, kRawDelta };
enum class EdgeMode : uint8_t { kLakhani, kWeightedAverage };
enum class ScanOrder : uint8_t { kZigzag, kRaster };

struct ModelOptions {
  DcMode dc = DcMode::kGradient;
  EdgeMode edge = EdgeMode::kLakhani;
  ScanOrder order = ScanOrder::kZigzag;
};

inline constexpr int kMaxAcBits = 11;  // |AC| < 2048
inline constexpr int kMaxDcErrorBits = 12;

// ---------------------------------------------------------------------------
// Layout

// A dense N-dimensional block of bins inside the grid. Every coordinate is
// range-checked when an index is formed.
template <size_t N>
class BinTable {
 public:
  BinTable() = default;
  BinTable(uint32_t offset, std::array<uint32_t, N> dims) : offset_(offset), dims_(dims) {}

  BinIndex operator()(std::array<uint32_t, N> idx) const {
    uint32_t flat = 0;
    for (size_t i = 0; i < N; ++i) {
      if (idx[i] >= dims_[i]) fail(ErrorCode::kInternal, "bin coordinate out of range");
      flat = flat * dims_[i] + idx[i];
    }
    return BinIndex{offset_ + flat};
  }

  template <class... Args>
  BinIndex at(Args... args) const {
    static_assert(sizeof...(Args) == N);
    return (*this)({static_cast<uint32_t>(args)...});
  }

  uint32_t offset() const { return offset_; }
  uint32_t size() const {
    uint32_t s = 1;
    for (uint32_t d : dims_) s *= d;
    return s;
  }
  const std::array<uint32_t, N>& dims() const { return dims_; }

 private:
  uint32_t offset_ = 0;
  std::array<uint32_t, N> dims_{};
};

struct ChannelLayout {
  BinTable<2> nz77;        // [count context][tree node]
  BinTable<4> exp77;       // [position][remaining bucket][prediction bucket][unary index]
  BinTable<3> sign77;      // [position][prediction bucket][prediction sign]
  BinTable<3> res77;       // [position][exponent][bit]
  BinTable<4> edge_count;  // [orientation][7x7 count bucket][neighbour count][tree node]
  BinTable<5> edge_exp;    // [orientation][k][prediction class][remaining bucket][unary index]
  BinTable<3> edge_sign;   // [orientation][k][signed prediction class]
  BinTable<5> edge_res;    // [orientation][k][prediction vs exponent][exponent][bit]
  BinTable<2> dc_exp;      // [confidence][unary index]
  BinTable<1> dc_sign;     // [confidence]
  BinTable<3> dc_res;      // [confidence][exponent][bit]
};

struct LayoutEntry {
  std::string name;
  uint32_t offset;
  std::vector<uint32_t> dims;
  uint32_t size;
};

class ModelLayout {
 public:
  static const ModelLayout& instance();

  const ChannelLayout& channel(ChannelKind kind) const { return channels_[static_cast<int>(kind)]; }
  uint32_t total_bins() const { return total_; }
  std::vector<LayoutEntry> describe() const;

 private:
  ModelLayout();

  std::array<ChannelLayout, 2> channels_;
  uint32_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Binarization

// Exp-Golomb style binarization: unary bit length of |v| (ones, then a
// terminating zero unless the maximum length was reached), the sign if v is
// nonzero (1 = negative), then the bits of |v| below its leading one, most
// significant first.
std::vector<int> exp_golomb_bits(int v, int max_len);

// Shared encode/decode path. `io.code(bin, bit)` writes `bit` when encoding
// and returns the bit actually coded; when decoding the argument is ignored.
// Returns the coded value.
template <class Io, class ExpBin, class SignBin, class ResBin>
int code_exp_golomb(Io& io, int v, int max_len, ExpBin&& exp_bin, SignBin&& sign_bin,
                    ResBin&& res_bin) {
  const unsigned mag_in = static_cast<unsigned>(v < 0 ? -v : v);
  int len_in = 0;
  while ((mag_in >> len_in) != 0) ++len_in;
  if (len_in > max_len) fail(ErrorCode::kInternal, "value too large for binarization");
  int len = 0;
  while (len < max_len) {
    if (!io.code(exp_bin(len), len < len_in ? 1 : 0)) break;
    ++len;
  }
  if (len == 0) return 0;
  const int neg = io.code(sign_bin(), v < 0 ? 1 : 0);
  int mag = 1;
  for (int i = len - 2; i >= 0; --i) {
    mag = (mag << 1) | io.code(res_bin(len, i), static_cast<int>((mag_in >> i) & 1));
  }
  return neg ? -mag : mag;
}

// ---------------------------------------------------------------------------
// Contexts and predictors

// floor(log_1.59(n)) for 1 <= n < 1000, computed exactly in integers.
int log159_floor(uint64_t n);

// floor(log_1.59((n_above + n_left) / 2)) clamped to 0..9; a missing
// neighbour counts as zero.
int nonzero_count_context(std::optional<int> n_above, std::optional<int> n_left);

// Decoded block plus what later blocks need from it.
struct CodedBlock {
  QuantizedBlock q;
  uint8_t nz77 = 0;
  uint8_t nz_row = 0;  // nonzero 7x1 coefficients
  uint8_t nz_col = 0;  // nonzero 1x7 coefficients
  // Reconstructed pixels in 1/8 units (before level shift):
  // bottom[0] is row 7, bottom[1] row 6; right[0] is column 7, right[1] column 6.
  std::array<std::array<int32_t, 8>, 2> bottom{};
  std::array<std::array<int32_t, 8>, 2> right{};
};

struct BlockContext {
  const CodedBlock* above = nullptr;
  const CodedBlock* left = nullptr;
  const CodedBlock* above_left = nullptr;
  ChannelKind kind = ChannelKind::kLuma;
};

struct Prediction77 {
  int32_t sum = 0;  // 13 A + 13 L + 6 AL, i.e. 32 times the prediction
  int bucket = 0;   // floor(log2(|sum| / 32 + 1)), 0..10
  int sign = 0;     // 0 zero, 1 positive, 2 negative
};

Prediction77 predict_7x7(const BlockContext& ctx, int natural_index);

enum class Edge : uint8_t { kRow = 0, kColumn = 1 };

// Natural index of the k-th coefficient (1..7) along an edge.
constexpr int edge_index(Edge e, int k) { return e == Edge::kRow ? k : k * 8; }

// Predicted quantized value of the k-th edge coefficient of `cur`, whose
// 7x7 part must already be final. Row edges look at the block above,
// column edges at the block to the left; no neighbour means 0.
int predict_edge(const BlockContext& ctx, const QuantizedBlock& cur, Edge edge, int k,
                 const QuantTable& quant, EdgeMode mode);

// 0..39: exact for 0..7, then four classes per power of two.
int edge_magnitude_class(int magnitude);

// Fixed-point basis: round(B(x, u) * 2^13), B orthonormal.
extern const std::array<std::array<int32_t, 8>, 8> kDctBasis;

// Inverse DCT of the block with DC forced to zero, in 1/8 pixel units.
// Only rows 0, 1, 6, 7 and columns 0, 1, 6, 7 are filled in.
std::array<int32_t, 64> ac_only_border_pixels(const QuantizedBlock& b, const QuantTable& quant);

struct DcPrediction {
  int predicted = 0;
  int confidence = 0;  // 0..9, 9 = least certain
};

DcPrediction predict_dc(const BlockContext& ctx, const std::array<int32_t, 64>& ac_pixels,
                        const QuantTable& quant, DcMode mode);

// Fills nz counts and border pixels once the block is final.
void finalize_block(CodedBlock& out, const QuantizedBlock& q, const std::array<int32_t, 64>& ac_pixels,
                    const QuantTable& quant);

// ---------------------------------------------------------------------------
// Block coding

enum class CostComponent : uint8_t { kDc, kInterior, kEdge, kCount };

// Optional ideal-cost accounting (sum of -log2 p) per component, in bits.
struct CostAccumulator {
  std::array<double, static_cast<int>(CostComponent::kCount)> bits{};
};

class BlockCoder {
 public:
  BlockCoder(const QuantTable& quant, ChannelKind kind, ModelOptions options = {});

  void encode(RangeEncoder& enc, BinGrid& grid, const BlockContext& ctx, const QuantizedBlock& block,
              CodedBlock& out, CostAccumulator* cost = nullptr) const;
  void decode(RangeDecoder& dec, BinGrid& grid, const BlockContext& ctx, CodedBlock& out) const;

  template <class Io>
  void code(Io& io, BinGrid& grid, const BlockContext& ctx, QuantizedBlock& block, CodedBlock& out) const;

 private:
  const QuantTable& quant_;
  ChannelKind kind_;
  ModelOptions options_;
  const ChannelLayout& layout_;
};

// Order in which the 49 interior coefficients are visited.
const std::array<uint8_t, 49>& interior_order(ScanOrder order);

}  // namespace lepton
