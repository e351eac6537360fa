#include "lepton/coeff_model.h"

#include <algorithm>
#include <bit>
#include <cmath>

namespace lepton {

const std::array<std::array<int32_t, 8>, 8> kDctBasis = {{
    {2896, 4017, 3784, 3406, 2896, 2276, 1567, 799},
    {2896, 3406, 1567, -799, -2896, -4017, -3784, -2276},
    {2896, 2276, -1567, -4017, -2896, 799, 3784, 3406},
    {2896, 799, -3784, -2276, 2896, 3406, -1567, -4017},
    {2896, -799, -3784, 2276, 2896, -3406, -1567, 4017},
    {2896, -2276, -1567, 4017, -2896, -799, 3784, -3406},
    {2896, -3406, 1567, 799, -2896, 4017, -3784, 2276},
    {2896, -4017, 3784, -3406, 2896, -2276, 1567, -799},
}};

namespace {

constexpr uint32_t kCountContexts = 10;
constexpr uint32_t kRemainingBuckets = 9;  // log159 of 1..49
constexpr uint32_t kPredBuckets = 11;
constexpr uint32_t kEdgeClasses = 40;
constexpr uint32_t kEdgeRemaining = 4;

int bit_length(unsigned v) { return static_cast<int>(std::bit_width(v)); }

int64_t div_round(int64_t num, int64_t den) {
  const int64_t mag = ((num < 0 ? -num : num) + den / 2) / den;
  return num < 0 ? -mag : mag;
}

uint32_t count_bucket(int n77) { return n77 == 0 ? 0 : 1 + std::min(8, log159_floor(n77)); }

uint32_t edge_remaining_bucket(int r) { return r <= 2 ? r - 1 : (r <= 4 ? 2 : 3); }

std::array<uint8_t, 49> make_order(ScanOrder order) {
  std::array<uint8_t, 49> out{};
  int j = 0;
  if (order == ScanOrder::kZigzag) {
    for (uint8_t nat : kZigzagToNatural) {
      if (coeff_class(nat) == CoeffClass::kInterior) out[j++] = nat;
    }
  } else {
    for (int v = 1; v < 8; ++v) {
      for (int u = 1; u < 8; ++u) out[j++] = static_cast<uint8_t>(v * 8 + u);
    }
  }
  return out;
}

const std::array<uint8_t, 49> kZigzagInterior = make_order(ScanOrder::kZigzag);
const std::array<uint8_t, 49> kRasterInterior = make_order(ScanOrder::kRaster);

struct EncodeIo {
  RangeEncoder& enc;
  BinGrid& grid;
  CostAccumulator* cost;
  CostComponent component = CostComponent::kInterior;

  int code(BinIndex i, int bit) {
    StatisticBin& b = grid.at(i);
    if (cost) {
      const double p0 = b.p0() / 65536.0;
      cost->bits[static_cast<int>(component)] -= std::log2(bit ? 1.0 - p0 : p0);
    }
    enc.put_bit(b, bit);
    return bit;
  }
};

struct DecodeIo {
  RangeDecoder& dec;
  BinGrid& grid;
  CostComponent component = CostComponent::kInterior;

  int code(BinIndex i, int) { return dec.get_bit(grid.at(i)); }
};

}  // namespace

// ---------------------------------------------------------------------------

ModelLayout::ModelLayout() {
  uint32_t off = 0;
  auto take = [&off](auto& table, auto dims) {
    using T = std::remove_reference_t<decltype(table)>;
    table = T(off, dims);
    off += table.size();
  };
  for (auto& c : channels_) {
    take(c.nz77, std::array<uint32_t, 2>{kCountContexts, 63});
    take(c.exp77, std::array<uint32_t, 4>{49, kRemainingBuckets, kPredBuckets, kMaxAcBits});
    take(c.sign77, std::array<uint32_t, 3>{49, kPredBuckets, 3});
    take(c.res77, std::array<uint32_t, 3>{49, kMaxAcBits + 1, kMaxAcBits - 1});
    take(c.edge_count, std::array<uint32_t, 4>{2, 10, 8, 7});
    take(c.edge_exp, std::array<uint32_t, 5>{2, 7, kEdgeClasses, kEdgeRemaining, kMaxAcBits});
    take(c.edge_sign, std::array<uint32_t, 3>{2, 7, 2 * kEdgeClasses + 1});
    take(c.edge_res, std::array<uint32_t, 5>{2, 7, 4, kMaxAcBits + 1, kMaxAcBits - 1});
    take(c.dc_exp, std::array<uint32_t, 2>{10, kMaxDcErrorBits});
    take(c.dc_sign, std::array<uint32_t, 1>{10});
    take(c.dc_res, std::array<uint32_t, 3>{10, kMaxDcErrorBits + 1, kMaxDcErrorBits - 1});
  }
  total_ = off;
}

const ModelLayout& ModelLayout::instance() {
  static const ModelLayout layout;
  return layout;
}

std::vector<LayoutEntry> ModelLayout::describe() const {
  std::vector<LayoutEntry> out;
  auto add = [&out](const std::string& name, const auto& t) {
    out.push_back({name, t.offset(), std::vector<uint32_t>(t.dims().begin(), t.dims().end()), t.size()});
  };
  for (int k = 0; k < 2; ++k) {
    const std::string p = k == 0 ? "luma." : "chroma.";
    const ChannelLayout& c = channels_[k];
    add(p + "nz77", c.nz77);
    add(p + "exp77", c.exp77);
    add(p + "sign77", c.sign77);
    add(p + "res77", c.res77);
    add(p + "edge_count", c.edge_count);
    add(p + "edge_exp", c.edge_exp);
    add(p + "edge_sign", c.edge_sign);
    add(p + "edge_res", c.edge_res);
    add(p + "dc_exp", c.dc_exp);
    add(p + "dc_sign", c.dc_sign);
    add(p + "dc_res", c.dc_res);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<int> exp_golomb_bits(int v, int max_len) {
  struct Recorder {
    std::vector<int> bits;
    int code(BinIndex, int bit) {
      bits.push_back(bit);
      return bit;
    }
  } rec;
  auto any = [](auto...) { return BinIndex{}; };
  code_exp_golomb(rec, v, max_len, any, any, any);
  return rec.bits;
}

namespace {

// Largest k <= cap with 1.59^k <= num / den, i.e. 159^k * den <= num * 100^k.
int log159_exact(uint64_t num, uint64_t den, int cap) {
  unsigned __int128 pow159 = 1, pow100 = 1;
  int k = 0;
  while (k < cap) {
    pow159 *= 159;
    pow100 *= 100;
    if (den * pow159 > pow100 * num) break;
    ++k;
  }
  return k;
}

struct Log159Table {
  std::array<uint8_t, 1024> v{};
  Log159Table() {
    for (uint64_t n = 1; n < v.size(); ++n) v[n] = static_cast<uint8_t>(log159_exact(n, 1, 15));
  }
};

const Log159Table kLog159;

}  // namespace

int log159_floor(uint64_t n) {
  if (n == 0) fail(ErrorCode::kInternal, "log of zero");
  return n < kLog159.v.size() ? kLog159.v[n] : log159_exact(n, 1, 15);
}

int nonzero_count_context(std::optional<int> n_above, std::optional<int> n_left) {
  const uint64_t s = static_cast<uint64_t>(n_above.value_or(0)) + static_cast<uint64_t>(n_left.value_or(0));
  if (s < 2) return 0;
  // floor(log_1.59(s / 2)) capped at 9; log is monotone so halving the
  // table argument is exact only via the rational form.
  return log159_exact(s, 2, 9);
}

Prediction77 predict_7x7(const BlockContext& ctx, int natural_index) {
  Prediction77 p;
  if (ctx.above) p.sum += 13 * ctx.above->q.coeffs[natural_index];
  if (ctx.left) p.sum += 13 * ctx.left->q.coeffs[natural_index];
  if (ctx.above_left) p.sum += 6 * ctx.above_left->q.coeffs[natural_index];
  const unsigned mag = static_cast<unsigned>(p.sum < 0 ? -p.sum : p.sum);
  p.bucket = std::min(10, bit_length(mag + 32) - 1 - 5);
  p.sign = p.sum == 0 ? 0 : (p.sum > 0 ? 1 : 2);
  return p;
}

int edge_magnitude_class(int magnitude) {
  if (magnitude < 8) return magnitude;
  const int e = bit_length(static_cast<unsigned>(magnitude)) - 1;
  return std::min<int>(kEdgeClasses - 1, 8 + (e - 3) * 4 + ((magnitude >> (e - 2)) & 3));
}

int predict_edge(const BlockContext& ctx, const QuantizedBlock& cur, Edge edge, int k,
                 const QuantTable& quant, EdgeMode mode) {
  const int target = edge_index(edge, k);
  int64_t pred;
  if (mode == EdgeMode::kWeightedAverage) {
    int64_t sum = 0;
    if (ctx.above) sum += 13 * ctx.above->q.coeffs[target];
    if (ctx.left) sum += 13 * ctx.left->q.coeffs[target];
    if (ctx.above_left) sum += 6 * ctx.above_left->q.coeffs[target];
    pred = div_round(sum, 32);
  } else {
    const CodedBlock* nb = edge == Edge::kRow ? ctx.above : ctx.left;
    if (!nb) return 0;
    // Index of coefficient j along the direction perpendicular to the edge.
    auto at = [edge, k](int j) { return edge == Edge::kRow ? j * 8 + k : k * 8 + j; };
    int64_t num = 0;
    for (int j = 0; j < 8; ++j) {
      num += int64_t{kDctBasis[7][j]} * nb->q.coeffs[at(j)] * quant[at(j)];
    }
    for (int j = 1; j < 8; ++j) {
      num -= int64_t{kDctBasis[0][j]} * cur.coeffs[at(j)] * quant[at(j)];
    }
    pred = div_round(num, int64_t{kDctBasis[0][0]} * quant[target]);
  }
  return static_cast<int>(std::clamp<int64_t>(pred, -2047, 2047));
}

std::array<int32_t, 64> ac_only_border_pixels(const QuantizedBlock& b, const QuantTable& quant) {
  // B(7 - x, u) = (-1)^u B(x, u), so each pass sums even and odd terms once
  // for a mirrored pair of outputs.
  //
  // Horizontal pass: t[v][x] = sum_u B(x,u) F(u,v), kept with 3 extra bits.
  // Only rows v with a nonzero coefficient take part.
  std::array<std::array<int64_t, 8>, 8> t;
  std::array<int, 8> rows;
  int nrows = 0;
  for (int v = 0; v < 8; ++v) {
    int us[8];
    int64_t f[8];
    int n = 0;
    for (int u = (v == 0 ? 1 : 0); u < 8; ++u) {
      const int16_t c = b.coeffs[v * 8 + u];
      if (c != 0) {
        us[n] = u;
        f[n++] = int64_t{c} * quant[v * 8 + u];
      }
    }
    if (n == 0) continue;
    for (int x = 0; x < 4; ++x) {
      int64_t even = 0, odd = 0;
      for (int i = 0; i < n; ++i) {
        const int64_t term = kDctBasis[x][us[i]] * f[i];
        if (us[i] & 1) {
          odd += term;
        } else {
          even += term;
        }
      }
      t[v][x] = (even + odd + 512) >> 10;
      t[v][7 - x] = (even - odd + 512) >> 10;
    }
    rows[nrows++] = v;
  }
  std::array<int32_t, 64> px{};
  if (nrows == 0) return px;
  int64_t tmax = 0;
  for (int i = 0; i < nrows; ++i) {
    for (int64_t v : t[rows[i]]) tmax = std::max(tmax, v < 0 ? -v : v);
  }
  if (tmax <= 65536) {
    // 8 * 4017 * 65536 + 4096 fits in int32, so the narrow sums are exact.
    int32_t t32[8][8];
    int32_t k32[4][8];
    for (int i = 0; i < nrows; ++i) {
      for (int x = 0; x < 8; ++x) t32[i][x] = static_cast<int32_t>(t[rows[i]][x]);
      for (int y = 0; y < 4; ++y) k32[y][i] = kDctBasis[y][rows[i]];
    }
    for (int y = 0; y < 4; ++y) {
      int32_t even[8] = {}, odd[8] = {};
      for (int i = 0; i < nrows; ++i) {
        const int32_t k = k32[y][i];
        int32_t* acc = (rows[i] & 1) ? odd : even;
        for (int x = 0; x < 8; ++x) acc[x] += k * t32[i][x];
      }
      for (int x = 0; x < 8; ++x) {
        px[y * 8 + x] = (even[x] + odd[x] + 4096) >> 13;
        px[(7 - y) * 8 + x] = (even[x] - odd[x] + 4096) >> 13;
      }
    }
  } else {
    for (int y = 0; y < 4; ++y) {
      int64_t even[8] = {}, odd[8] = {};
      for (int i = 0; i < nrows; ++i) {
        const int64_t k = kDctBasis[y][rows[i]];
        int64_t* acc = (rows[i] & 1) ? odd : even;
        for (int x = 0; x < 8; ++x) acc[x] += k * t[rows[i]][x];
      }
      for (int x = 0; x < 8; ++x) {
        px[y * 8 + x] = static_cast<int32_t>((even[x] + odd[x] + 4096) >> 13);
        px[(7 - y) * 8 + x] = static_cast<int32_t>((even[x] - odd[x] + 4096) >> 13);
      }
    }
  }
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 6; ++x) px[y * 8 + x] = 0;
  }
  return px;
}

DcPrediction predict_dc(const BlockContext& ctx, const std::array<int32_t, 64>& ac, const QuantTable& quant,
                        DcMode mode) {
  DcPrediction out;
  if (mode == DcMode::kRawDelta) {
    out.predicted = ctx.left ? ctx.left->q.dc() : (ctx.above ? ctx.above->q.dc() : 0);
    out.confidence = 0;
    return out;
  }
  if (!ctx.above && !ctx.left) {
    out.confidence = 9;
    return out;
  }
  std::array<int64_t, 16> s{};
  int n = 0;
  const bool median = mode == DcMode::kMedianFirstCut;
  if (ctx.above) {
    for (int x = 0; x < 8; ++x) {
      const int64_t a0 = ctx.above->bottom[0][x], a1 = ctx.above->bottom[1][x];
      const int64_t c0 = ac[x], c1 = ac[8 + x];
      s[n++] = median ? 2 * a0 - 2 * c0 : 3 * a0 - a1 - 3 * c0 + c1;
    }
  }
  if (ctx.left) {
    for (int y = 0; y < 8; ++y) {
      const int64_t a0 = ctx.left->right[0][y], a1 = ctx.left->right[1][y];
      const int64_t c0 = ac[y * 8], c1 = ac[y * 8 + 1];
      s[n++] = median ? 2 * a0 - 2 * c0 : 3 * a0 - a1 - 3 * c0 + c1;
    }
  }
  const int64_t q2 = 2 * int64_t{quant[0]};
  std::sort(s.begin(), s.begin() + n);
  int64_t sum = 0;
  int used = n;
  if (median) {
    used = n / 2;
    for (int i = n / 4; i < n / 4 + used; ++i) sum += s[i];
  } else {
    for (int i = 0; i < n; ++i) sum += s[i];
  }
  out.predicted = static_cast<int>(std::clamp<int64_t>(div_round(sum, q2 * used), -2047, 2047));
  const int64_t spread = (s[n - 1] - s[0]) / q2;
  out.confidence = std::min(9, bit_length(static_cast<unsigned>(std::min<int64_t>(spread, 1 << 20)) + 1) - 1);
  return out;
}

void finalize_block(CodedBlock& out, const QuantizedBlock& q, const std::array<int32_t, 64>& ac,
                    const QuantTable& quant) {
  out.q = q;
  int n77 = 0, nr = 0, nc = 0;
  for (int i = 1; i < 64; ++i) {
    if (q.coeffs[i] == 0) continue;
    switch (coeff_class(i)) {
      case CoeffClass::kInterior: ++n77; break;
      case CoeffClass::kRowEdge: ++nr; break;
      case CoeffClass::kColumnEdge: ++nc; break;
      case CoeffClass::kDc: break;
    }
  }
  out.nz77 = static_cast<uint8_t>(n77);
  out.nz_row = static_cast<uint8_t>(nr);
  out.nz_col = static_cast<uint8_t>(nc);
  const int32_t dc = q.dc() * static_cast<int32_t>(quant[0]);
  for (int i = 0; i < 8; ++i) {
    out.bottom[0][i] = ac[56 + i] + dc;
    out.bottom[1][i] = ac[48 + i] + dc;
    out.right[0][i] = ac[i * 8 + 7] + dc;
    out.right[1][i] = ac[i * 8 + 6] + dc;
  }
}

const std::array<uint8_t, 49>& interior_order(ScanOrder order) {
  return order == ScanOrder::kZigzag ? kZigzagInterior : kRasterInterior;
}

// ---------------------------------------------------------------------------

BlockCoder::BlockCoder(const QuantTable& quant, ChannelKind kind, ModelOptions options)
    : quant_(quant), kind_(kind), options_(options), layout_(ModelLayout::instance().channel(kind)) {}

template <class Io>
void BlockCoder::code(Io& io, BinGrid&, const BlockContext& ctx, QuantizedBlock& b, CodedBlock& out) const {
  const ChannelLayout& L = layout_;

  // Interior coefficients.
  io.component = CostComponent::kInterior;
  int n77 = 0;
  for (int i = 9; i < 64; ++i) n77 += (coeff_class(i) == CoeffClass::kInterior && b.coeffs[i] != 0);
  const int cctx = nonzero_count_context(ctx.above ? std::optional<int>(ctx.above->nz77) : std::nullopt,
                                         ctx.left ? std::optional<int>(ctx.left->nz77) : std::nullopt);
  int node = 1;
  for (int i = 5; i >= 0; --i) node = node * 2 + io.code(L.nz77.at(cctx, node - 1), (n77 >> i) & 1);
  n77 = node - 64;
  if (n77 > 49) fail(ErrorCode::kCorruptStream, "7x7 nonzero count above 49");

  int remaining = n77;
  const auto& order = interior_order(options_.order);
  for (int j = 0; j < 49 && remaining > 0; ++j) {
    const int nat = order[j];
    const uint32_t pos = static_cast<uint32_t>(((nat >> 3) - 1) * 7 + (nat & 7) - 1);
    const Prediction77 p = predict_7x7(ctx, nat);
    const int nzb = log159_floor(static_cast<uint64_t>(remaining));
    const int v = code_exp_golomb(
        io, b.coeffs[nat], kMaxAcBits, [&](int i) { return L.exp77.at(pos, nzb, p.bucket, i); },
        [&] { return L.sign77.at(pos, p.bucket, p.sign); },
        [&](int n, int i) { return L.res77.at(pos, n, i); });
    b.coeffs[nat] = static_cast<int16_t>(v);
    if (v != 0) --remaining;
  }
  if (remaining != 0) fail(ErrorCode::kCorruptStream, "7x7 nonzero count not reached");

  // Edges.
  io.component = CostComponent::kEdge;
  const uint32_t nzb77 = count_bucket(n77);
  for (Edge e : {Edge::kRow, Edge::kColumn}) {
    const uint32_t o = static_cast<uint32_t>(e);
    int cnt = 0;
    for (int k = 1; k < 8; ++k) cnt += b.coeffs[edge_index(e, k)] != 0;
    const CodedBlock* nb = e == Edge::kRow ? ctx.above : ctx.left;
    const uint32_t ncnt = nb ? (e == Edge::kRow ? nb->nz_row : nb->nz_col) : 0;
    node = 1;
    for (int i = 2; i >= 0; --i) node = node * 2 + io.code(L.edge_count.at(o, nzb77, ncnt, node - 1), (cnt >> i) & 1);
    remaining = node - 8;
    for (int k = 1; k < 8 && remaining > 0; ++k) {
      const int nat = edge_index(e, k);
      const int pred = predict_edge(ctx, b, e, k, quant_, options_.edge);
      const int pmag = pred < 0 ? -pred : pred;
      const int cls = edge_magnitude_class(pmag);
      const int scode = static_cast<int>(kEdgeClasses) + (pred < 0 ? -cls : cls);
      const uint32_t rb = edge_remaining_bucket(remaining);
      const int plen = bit_length(static_cast<unsigned>(pmag));
      const int v = code_exp_golomb(
          io, b.coeffs[nat], kMaxAcBits, [&](int i) { return L.edge_exp.at(o, k - 1, cls, rb, i); },
          [&] { return L.edge_sign.at(o, k - 1, scode); },
          [&](int n, int i) {
            const int rel = plen < n ? 0 : (plen > n ? 1 : 2 + ((pmag >> i) & 1));
            return L.edge_res.at(o, k - 1, rel, n, i);
          });
      b.coeffs[nat] = static_cast<int16_t>(v);
      if (v != 0) --remaining;
    }
    if (remaining != 0) fail(ErrorCode::kCorruptStream, "edge nonzero count not reached");
  }

  // DC last: the prediction uses every AC coefficient of the block.
  io.component = CostComponent::kDc;
  const std::array<int32_t, 64> ac = ac_only_border_pixels(b, quant_);
  const DcPrediction dp = predict_dc(ctx, ac, quant_, options_.dc);
  const int err = code_exp_golomb(
      io, b.coeffs[0] - dp.predicted, kMaxDcErrorBits, [&](int i) { return L.dc_exp.at(dp.confidence, i); },
      [&] { return L.dc_sign.at(dp.confidence); },
      [&](int n, int i) { return L.dc_res.at(dp.confidence, n, i); });
  const int dc = dp.predicted + err;
  if (dc <= -2048 || dc >= 2048) fail(ErrorCode::kCorruptStream, "DC out of range");
  b.coeffs[0] = static_cast<int16_t>(dc);
  finalize_block(out, b, ac, quant_);
}

void BlockCoder::encode(RangeEncoder& enc, BinGrid& grid, const BlockContext& ctx, const QuantizedBlock& block,
                        CodedBlock& out, CostAccumulator* cost) const {
  EncodeIo io{enc, grid, cost};
  QuantizedBlock copy = block;
  code(io, grid, ctx, copy, out);
}

void BlockCoder::decode(RangeDecoder& dec, BinGrid& grid, const BlockContext& ctx, CodedBlock& out) const {
  DecodeIo io{dec, grid};
  QuantizedBlock b;
  code(io, grid, ctx, b, out);
}

}  // namespace lepton
