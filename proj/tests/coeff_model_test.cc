#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lepton/coeff_model.h"

namespace lepton {
namespace {

QuantTable flat_quant(uint16_t q) {
  QuantTable t;
  t.fill(q);
  return t;
}

QuantTable random_quant(std::mt19937& rng) {
  QuantTable t;
  for (auto& q : t) q = static_cast<uint16_t>(1 + rng() % 40);
  return t;
}

// Floating-point reference DCT used only as an oracle.
double basis(int x, int u) {
  const double c = u == 0 ? 1.0 / std::sqrt(8.0) : 0.5;
  return c * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
}

QuantizedBlock forward_dct(const std::array<double, 64>& px, const QuantTable& quant) {
  QuantizedBlock b;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) s += basis(x, u) * basis(y, v) * px[y * 8 + x];
      }
      b.at(u, v) = static_cast<int16_t>(std::lround(s / quant[v * 8 + u]));
    }
  }
  return b;
}

CodedBlock make_coded(const QuantizedBlock& q, const QuantTable& quant) {
  CodedBlock c;
  finalize_block(c, q, ac_only_border_pixels(q, quant), quant);
  return c;
}

TEST(ExpGolomb, SpecimenBinarizations) {
  EXPECT_EQ(exp_golomb_bits(0, 11), (std::vector<int>{0}));
  EXPECT_EQ(exp_golomb_bits(1, 11), (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(exp_golomb_bits(-1, 11), (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(exp_golomb_bits(-5, 11), (std::vector<int>{1, 1, 1, 0, 1, 0, 1}));
  // At the maximum length the terminator is implied.
  const auto max = exp_golomb_bits(2047, 11);
  EXPECT_EQ(max.size(), 11u + 1u + 10u);
  EXPECT_THROW(exp_golomb_bits(2048, 11), Error);
}

TEST(ExpGolomb, BitLengthProperty) {
  for (int v = -2047; v <= 2047; ++v) {
    const auto bits = exp_golomb_bits(v, 11);
    int unary = 0;
    while (unary < 11 && bits[unary] == 1) ++unary;
    const int mag = std::abs(v);
    const int expect_len = mag == 0 ? 0 : static_cast<int>(std::floor(std::log2(mag))) + 1;
    ASSERT_EQ(unary, expect_len) << v;
    const size_t expect_size = unary + (unary < 11 ? 1 : 0) + (v != 0 ? 1 : 0) + std::max(unary - 1, 0);
    ASSERT_EQ(bits.size(), expect_size) << v;
  }
}

TEST(Contexts, NonzeroCountExamples) {
  EXPECT_EQ(nonzero_count_context(0, 0), 0);
  EXPECT_EQ(nonzero_count_context(std::nullopt, std::nullopt), 0);
  EXPECT_EQ(nonzero_count_context(7, 9), 4);
  EXPECT_EQ(nonzero_count_context(49, 49), 8);
  EXPECT_EQ(nonzero_count_context(1, 0), 0);
}

TEST(Contexts, NonzeroCountMatchesFloatingLog) {
  for (int a = 0; a <= 49; ++a) {
    for (int l = 0; l <= 49; ++l) {
      for (bool la : {true, false}) {
        const double avg = ((la ? a : 0) + l) / 2.0;
        const int expect = avg < 1 ? 0 : std::clamp(static_cast<int>(std::floor(std::log(avg) / std::log(1.59) + 1e-12)), 0, 9);
        EXPECT_EQ(nonzero_count_context(la ? std::optional<int>(a) : std::nullopt, l), expect) << a << " " << l;
      }
    }
  }
}

TEST(Contexts, Log159) {
  for (uint64_t n = 1; n < 1000; ++n) {
    const int expect = static_cast<int>(std::floor(std::log(static_cast<double>(n)) / std::log(1.59) + 1e-12));
    ASSERT_EQ(log159_floor(n), expect) << n;
  }
}

TEST(Predict7x7, Examples) {
  CodedBlock a, l, al;
  const int idx = 1 * 8 + 1;
  a.q.coeffs[idx] = 4;
  l.q.coeffs[idx] = 4;
  Prediction77 p = predict_7x7({&a, &l, &al}, idx);
  EXPECT_EQ(p.sum, 104);  // 3.25 * 32
  EXPECT_EQ(p.bucket, 2);
  EXPECT_EQ(p.sign, 1);

  p = predict_7x7({}, idx);
  EXPECT_EQ(p.sum, 0);
  EXPECT_EQ(p.bucket, 0);
  EXPECT_EQ(p.sign, 0);

  a.q.coeffs[idx] = l.q.coeffs[idx] = al.q.coeffs[idx] = -8;
  p = predict_7x7({&a, &l, &al}, idx);
  EXPECT_EQ(p.sum, -256);  // -8 * 32
  EXPECT_EQ(p.bucket, 3);
  EXPECT_EQ(p.sign, 2);
}

TEST(Predict7x7, BucketMatchesLog2) {
  CodedBlock a;
  for (int v = -2047; v <= 2047; ++v) {
    a.q.coeffs[9] = static_cast<int16_t>(v);
    const Prediction77 p = predict_7x7({&a, nullptr, nullptr}, 9);
    const double f = std::abs(13.0 * v / 32.0);
    ASSERT_EQ(p.bucket, std::min(10, static_cast<int>(std::floor(std::log2(f + 1)))));
  }
}

TEST(PredictEdge, FlatNeighbourPredictsZero) {
  const QuantTable q = flat_quant(3);
  QuantizedBlock flat;
  flat.coeffs[0] = 40;
  const CodedBlock nb = make_coded(flat, q);
  const QuantizedBlock cur;
  for (int k = 1; k < 8; ++k) {
    EXPECT_EQ(predict_edge({nullptr, &nb, nullptr}, cur, Edge::kColumn, k, q, EdgeMode::kLakhani), 0);
    EXPECT_EQ(predict_edge({&nb, nullptr, nullptr}, cur, Edge::kRow, k, q, EdgeMode::kLakhani), 0);
  }
  EXPECT_EQ(predict_edge({}, cur, Edge::kRow, 3, q, EdgeMode::kLakhani), 0);
}

TEST(PredictEdge, LinearFieldsArePredictedAcrossTheBoundary) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> slope(-6, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = 20 + trial % 50, bx = slope(rng), by = slope(rng);
    const QuantTable q = flat_quant(static_cast<uint16_t>(1 + trial % 2));
    // Pixel field over a 16x16 area: blocks (0,0) above-left, (1,0) above,
    // (0,1) left, (1,1) current.
    auto field = [&](int X, int Y) { return a + bx * X + by * Y; };
    auto block_at = [&](int bx0, int by0) {
      std::array<double, 64> px;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) px[y * 8 + x] = field(bx0 * 8 + x, by0 * 8 + y);
      }
      return forward_dct(px, q);
    };
    const CodedBlock above = make_coded(block_at(1, 0), q);
    const CodedBlock left = make_coded(block_at(0, 1), q);
    const QuantizedBlock cur = block_at(1, 1);
    const BlockContext ctx{&above, &left, nullptr};
    for (int k = 1; k < 8; ++k) {
      const int row = predict_edge(ctx, cur, Edge::kRow, k, q, EdgeMode::kLakhani);
      const int col = predict_edge(ctx, cur, Edge::kColumn, k, q, EdgeMode::kLakhani);
      EXPECT_NEAR(row, cur.at(k, 0), 1) << "trial " << trial << " k " << k;
      EXPECT_NEAR(col, cur.at(0, k), 1) << "trial " << trial << " k " << k;
    }
  }
}

TEST(PredictEdge, TransposeSymmetry) {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> coef(-60, 60);
  for (int trial = 0; trial < 2000; ++trial) {
    const QuantTable q = random_quant(rng);
    QuantTable qt;
    QuantizedBlock nb, cur, nbt, curt;
    for (int v = 0; v < 8; ++v) {
      for (int u = 0; u < 8; ++u) {
        nb.at(u, v) = static_cast<int16_t>(coef(rng));
        cur.at(u, v) = static_cast<int16_t>(coef(rng) / (1 + u + v));
        qt[u * 8 + v] = q[v * 8 + u];
      }
    }
    for (int v = 0; v < 8; ++v) {
      for (int u = 0; u < 8; ++u) {
        nbt.at(v, u) = nb.at(u, v);
        curt.at(v, u) = cur.at(u, v);
      }
    }
    const CodedBlock above = make_coded(nb, q);
    const CodedBlock left_t = make_coded(nbt, qt);
    for (int k = 1; k < 8; ++k) {
      const int r = predict_edge({&above, nullptr, nullptr}, cur, Edge::kRow, k, q, EdgeMode::kLakhani);
      const int c = predict_edge({nullptr, &left_t, nullptr}, curt, Edge::kColumn, k, qt, EdgeMode::kLakhani);
      ASSERT_EQ(r, c) << trial << " " << k;
    }
  }
}

TEST(PredictEdge, MagnitudeClasses) {
  for (int m = 0; m < 8; ++m) EXPECT_EQ(edge_magnitude_class(m), m);
  EXPECT_EQ(edge_magnitude_class(8), 8);
  EXPECT_EQ(edge_magnitude_class(10), 9);
  EXPECT_EQ(edge_magnitude_class(15), 11);
  EXPECT_EQ(edge_magnitude_class(16), 12);
  EXPECT_EQ(edge_magnitude_class(2047), 39);
  int prev = 0;
  for (int m = 0; m < 4096; ++m) {
    const int c = edge_magnitude_class(m);
    ASSERT_GE(c, prev);
    ASSERT_LE(c, 39);
    prev = c;
  }
}

TEST(Idct, BorderPixelsMatchFloatingPoint) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> coef(-200, 200);
  for (int trial = 0; trial < 500; ++trial) {
    const QuantTable q = random_quant(rng);
    QuantizedBlock b;
    for (int i = 1; i < 64; ++i) b.coeffs[i] = static_cast<int16_t>(coef(rng) / (1 + i / 4));
    const auto px = ac_only_border_pixels(b, q);
    double l1 = 0;
    for (int i = 1; i < 64; ++i) l1 += std::abs(b.coeffs[i] * q[i]);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (!(y < 2 || y > 5 || x < 2 || x > 5)) continue;
        double s = 0;
        for (int v = 0; v < 8; ++v) {
          for (int u = 0; u < 8; ++u) {
            if (u + v) s += basis(x, u) * basis(y, v) * b.at(u, v) * q[v * 8 + u];
          }
        }
        // 13-bit basis constants: each product is off by at most 2^-14.
        ASSERT_NEAR(px[y * 8 + x], 8 * s, 1.5 + 8 * l1 / 16384.0);
      }
    }
  }
}

TEST(PredictDc, UniformFieldIsExact) {
  for (DcMode mode : {DcMode::kGradient, DcMode::kMedianFirstCut}) {
    const QuantTable q = flat_quant(7);
    QuantizedBlock nb;
    nb.coeffs[0] = -33;
    const CodedBlock a = make_coded(nb, q), l = make_coded(nb, q);
    const QuantizedBlock cur;
    const DcPrediction p = predict_dc({&a, &l, &a}, ac_only_border_pixels(cur, q), q, mode);
    EXPECT_EQ(p.predicted, -33);
    EXPECT_EQ(p.confidence, 0);
    const DcPrediction only_above = predict_dc({&a, nullptr, nullptr}, ac_only_border_pixels(cur, q), q, mode);
    EXPECT_EQ(only_above.predicted, -33);
  }
}

TEST(PredictDc, CornerBlockFallsBack) {
  const QuantTable q = flat_quant(5);
  const DcPrediction p = predict_dc({}, ac_only_border_pixels(QuantizedBlock{}, q), q, DcMode::kGradient);
  EXPECT_EQ(p.predicted, 0);
  EXPECT_EQ(p.confidence, 9);
}

// Float reference of the gradient predictor, fed the same dequantized
// coefficients.
double reference_gradient_dc(const QuantizedBlock& above, const QuantizedBlock& left,
                             const QuantizedBlock& cur, const QuantTable& q) {
  auto pixel = [&q](const QuantizedBlock& b, int x, int y, bool with_dc) {
    double s = 0;
    for (int v = 0; v < 8; ++v) {
      for (int u = 0; u < 8; ++u) {
        if (u + v == 0 && !with_dc) continue;
        s += basis(x, u) * basis(y, v) * b.at(u, v) * q[v * 8 + u];
      }
    }
    return s;
  };
  double sum = 0;
  for (int i = 0; i < 8; ++i) {
    sum += (3 * pixel(above, i, 7, true) - pixel(above, i, 6, true) - 3 * pixel(cur, i, 0, false) +
            pixel(cur, i, 1, false)) / 2;
    sum += (3 * pixel(left, 7, i, true) - pixel(left, 6, i, true) - 3 * pixel(cur, 0, i, false) +
            pixel(cur, 1, i, false)) / 2;
  }
  return sum / 16 * 8 / q[0];
}

TEST(PredictDc, LinearGradientsAreRecovered) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> slope(-5, 5);
  int max_err = 0, max_ref = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const QuantTable q = flat_quant(static_cast<uint16_t>(1 + trial % 4));
    const double bx = trial % 3 == 0 ? 0 : slope(rng), by = slope(rng), base = slope(rng) * 10;
    auto block_at = [&](int bx0, int by0) {
      std::array<double, 64> px;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) px[y * 8 + x] = base + bx * (bx0 * 8 + x) + by * (by0 * 8 + y);
      }
      return forward_dct(px, q);
    };
    const QuantizedBlock a = block_at(1, 0), l = block_at(0, 1), cur = block_at(1, 1);
    const CodedBlock above = make_coded(a, q);
    const CodedBlock left = make_coded(l, q);
    const DcPrediction p = predict_dc({&above, &left, nullptr}, ac_only_border_pixels(cur, q), q, DcMode::kGradient);
    max_ref = std::max(max_ref, static_cast<int>(std::abs(p.predicted - std::lround(reference_gradient_dc(a, l, cur, q)))));
    max_err = std::max(max_err, std::abs(p.predicted - cur.dc()));
  }
  EXPECT_LE(max_ref, 1);
  // What is left is coefficient rounding (up to q/2 each), which the
  // two-row extrapolation amplifies; well under half a pixel.
  EXPECT_LE(max_err, 3);
}

TEST(Layout, TotalBinCountIsPinned) {
  const ModelLayout& l = ModelLayout::instance();
  EXPECT_EQ(l.total_bins(), 193324u);
  uint32_t sum = 0, next = 0;
  for (const LayoutEntry& e : l.describe()) {
    EXPECT_EQ(e.offset, next) << e.name;
    next = e.offset + e.size;
    sum += e.size;
  }
  EXPECT_EQ(sum, l.total_bins());
  EXPECT_EQ(l.channel(ChannelKind::kLuma).nz77.size(), 10u * 63u);
  EXPECT_THROW(l.channel(ChannelKind::kLuma).nz77.at(10, 0), Error);
  EXPECT_THROW(l.channel(ChannelKind::kChroma).exp77.at(0, 0, 0, -1), Error);
}

// Random sparse block with a photographic-looking magnitude profile.
QuantizedBlock random_block(std::mt19937& rng, int density) {
  QuantizedBlock b;
  std::uniform_int_distribution<int> pick(0, 99);
  std::geometric_distribution<int> mag(0.3);
  for (int i = 1; i < 64; ++i) {
    if (pick(rng) < density / (1 + (i % 8 + i / 8) / 3)) {
      int m = std::min(2047, 1 + mag(rng) * (1 + (pick(rng) == 0 ? 200 : 0)));
      b.coeffs[i] = static_cast<int16_t>(pick(rng) & 1 ? m : -m);
    }
  }
  b.coeffs[0] = static_cast<int16_t>(static_cast<int>(rng() % 4095) - 2047);
  if (pick(rng) == 0) b.coeffs[rng() % 63 + 1] = static_cast<int16_t>(pick(rng) & 1 ? 2047 : -2047);
  return b;
}

TEST(BlockCoder, RandomBlocksRoundTrip) {
  std::mt19937 rng(1234);
  const int kBlocks = 100000;
  const int kWidth = 50;
  for (DcMode dc : {DcMode::kGradient, DcMode::kMedianFirstCut, DcMode::kRawDelta}) {
    const int n = dc == DcMode::kGradient ? kBlocks : kBlocks / 20;
    const QuantTable q = random_quant(rng);
    const ModelOptions opt{dc, dc == DcMode::kRawDelta ? EdgeMode::kWeightedAverage : EdgeMode::kLakhani,
                           dc == DcMode::kMedianFirstCut ? ScanOrder::kRaster : ScanOrder::kZigzag};
    const ChannelKind kind = dc == DcMode::kGradient ? ChannelKind::kLuma : ChannelKind::kChroma;
    const BlockCoder coder(q, kind, opt);
    std::vector<QuantizedBlock> blocks(n);
    for (auto& b : blocks) b = random_block(rng, static_cast<int>(rng() % 100));

    // Blocks laid out in rows of kWidth; context from the previous row.
    auto run = [&](auto&& step) {
      std::vector<CodedBlock> prev(kWidth), cur(kWidth);
      for (int i = 0; i < n; ++i) {
        const int x = i % kWidth, y = i / kWidth;
        if (x == 0 && i > 0) std::swap(prev, cur);
        BlockContext ctx{y > 0 ? &prev[x] : nullptr, x > 0 ? &cur[x - 1] : nullptr,
                         (x > 0 && y > 0) ? &prev[x - 1] : nullptr, kind};
        step(i, ctx, cur[x]);
      }
    };
    RangeEncoder enc;
    BinGrid egrid(ModelLayout::instance().total_bins());
    run([&](int i, const BlockContext& ctx, CodedBlock& out) { coder.encode(enc, egrid, ctx, blocks[i], out); });
    enc.flush();
    SpanByteSource src(enc.output());
    RangeDecoder dec(src);
    BinGrid dgrid(ModelLayout::instance().total_bins());
    int mismatches = 0;
    run([&](int i, const BlockContext& ctx, CodedBlock& out) {
      coder.decode(dec, dgrid, ctx, out);
      mismatches += !(out.q == blocks[i]);
    });
    EXPECT_EQ(mismatches, 0);
    EXPECT_TRUE(egrid == dgrid);
  }
}

TEST(BlockCoder, AllZeroBlockWithEmptyContext) {
  const QuantTable q = flat_quant(4);
  const BlockCoder coder(q, ChannelKind::kLuma);
  RangeEncoder enc;
  BinGrid g(ModelLayout::instance().total_bins());
  CodedBlock out;
  CostAccumulator cost;
  coder.encode(enc, g, {}, QuantizedBlock{}, out, &cost);
  // Six count bits, 2x3 edge count bits and one DC bit, all at p = 1/2.
  EXPECT_DOUBLE_EQ(cost.bits[static_cast<int>(CostComponent::kInterior)], 6.0);
  EXPECT_DOUBLE_EQ(cost.bits[static_cast<int>(CostComponent::kEdge)], 6.0);
  EXPECT_DOUBLE_EQ(cost.bits[static_cast<int>(CostComponent::kDc)], 1.0);
  EXPECT_EQ(out.nz77, 0);
}

// A block whose only nonzero interior coefficient sits at the j-th slot of
// the visiting order touches exactly the exponent bins of slots 0..j.
TEST(BlockCoder, InteriorCodingStopsAtLastNonzero) {
  const QuantTable q = flat_quant(2);
  const ChannelLayout& L = ModelLayout::instance().channel(ChannelKind::kLuma);
  for (ScanOrder order : {ScanOrder::kZigzag, ScanOrder::kRaster}) {
    const auto& seq = interior_order(order);
    for (int j = 0; j < 49; ++j) {
      QuantizedBlock b;
      b.coeffs[seq[j]] = 3;
      const BlockCoder coder(q, ChannelKind::kLuma, {DcMode::kGradient, EdgeMode::kLakhani, order});
      RangeEncoder enc;
      BinGrid g(ModelLayout::instance().total_bins());
      CodedBlock out;
      coder.encode(enc, g, {}, b, out);
      std::vector<bool> touched(49, false);
      for (uint32_t pos = 0; pos < 49; ++pos) {
        const StatisticBin& bin = g.at(L.exp77.at(pos, 0, 0, 0));
        touched[pos] = bin.zeros() + bin.ones() > 0;
      }
      for (int s = 0; s < 49; ++s) {
        const int nat = seq[s];
        const int pos = ((nat >> 3) - 1) * 7 + (nat & 7) - 1;
        ASSERT_EQ(touched[pos], s <= j) << "slot " << s << " j " << j;
      }
    }
  }
}

TEST(BlockCoder, CorruptCountIsReported) {
  // Bytes of all ones decode a 7x7 count of 63.
  std::vector<uint8_t> junk(64, 0xFF);
  junk[0] = 0;
  SpanByteSource src(junk);
  RangeDecoder dec(src);
  BinGrid g(ModelLayout::instance().total_bins());
  const QuantTable q = flat_quant(1);
  const BlockCoder coder(q, ChannelKind::kLuma);
  CodedBlock out;
  try {
    coder.decode(dec, g, {}, out);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptStream);
  }
}

}  // namespace
}  // namespace lepton
