#include <gtest/gtest.h>

#include <random>

#include "jpeg_fixtures.h"
#include "lepton/error.h"
#include "lepton/jpeg_codec.h"

namespace lepton {
namespace {

using testing::EncodeOptions;
using testing::Subsampling;

Bytes reassemble(const ParsedJpeg& p) {
  Bytes out = p.header_bytes;
  ScanEncodeParams params{p.pad_bit, p.rst_count};
  Bytes scan = encode_scan(p.header, p.channels, params, {}, 0, p.header.mcu_rows);
  out.insert(out.end(), scan.begin(), scan.end());
  Bytes tail = p.trailer();
  out.insert(out.end(), tail.begin(), tail.end());
  if (out.size() > p.file_size) out.resize(p.file_size);
  return out;
}

ErrorCode parse_error(const Bytes& b) {
  try {
    parse_jpeg(b);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInternal;
}

int count_rst(ByteSpan scan) {
  int n = 0;
  for (size_t i = 0; i + 1 < scan.size(); ++i) {
    if (scan[i] == 0xFF && scan[i + 1] >= 0xD0 && scan[i + 1] <= 0xD7) ++n;
  }
  return n;
}

TEST(JpegCodec, OnePixelGray) {
  const Bytes jpeg = testing::encode_jpeg(testing::flat_image(1, 1, 1, 77), {.quality = 90});
  const ParsedJpeg p = parse_jpeg(jpeg);
  ASSERT_EQ(p.channels.size(), 1u);
  EXPECT_EQ(p.channels[0].blocks.size(), 1u);
  EXPECT_EQ(p.rst_count, 0u);
  EXPECT_EQ(p.header_bytes[0], 0xFF);
  EXPECT_EQ(p.header_bytes[1], 0xD8);
  EXPECT_TRUE(p.has_eoi);
  EXPECT_TRUE(p.append_garbage.empty());
  EXPECT_EQ(reassemble(p), jpeg);
}

TEST(JpegCodec, AppendedZerosAreCaptured) {
  const Bytes jpeg = testing::encode_jpeg(testing::flat_image(1, 1, 1, 77), {.quality = 90});
  Bytes padded = jpeg;
  padded.resize(jpeg.size() + 100, 0);
  const ParsedJpeg a = parse_jpeg(jpeg);
  const ParsedJpeg b = parse_jpeg(padded);
  EXPECT_EQ(b.append_garbage, Bytes(100, 0));
  EXPECT_EQ(a.header_bytes, b.header_bytes);
  EXPECT_EQ(a.channels[0].blocks, b.channels[0].blocks);
  EXPECT_EQ(a.scan_end, b.scan_end);
  EXPECT_EQ(reassemble(b), padded);
}

TEST(JpegCodec, HandBuiltScanAccumulatesDcDeltas) {
  // Standard luminance tables: DC cat 3 = 100, cat 2 = 011, EOB = 1010.
  // +5 -> 100 101, EOB; -2 -> 011 01, EOB; padded with ones.
  Bytes jpeg = testing::encode_jpeg(testing::flat_image(16, 8, 1, 128), {.quality = 90});
  const JpegHeader h = parse_header(jpeg);
  jpeg.resize(h.header_size);
  for (uint8_t b : {0x96, 0x9B, 0x5F, 0xFF, 0xD9}) jpeg.push_back(b);
  const ParsedJpeg p = parse_jpeg(jpeg);
  ASSERT_EQ(p.channels[0].blocks.size(), 2u);
  EXPECT_EQ(p.channels[0].blocks[0].dc(), 5);
  EXPECT_EQ(p.channels[0].blocks[1].dc(), 3);
  for (int i = 1; i < 64; ++i) {
    EXPECT_EQ(p.channels[0].blocks[0].coeffs[i], 0);
    EXPECT_EQ(p.channels[0].blocks[1].coeffs[i], 0);
  }
  EXPECT_EQ(p.pad_bit, 1);
  EXPECT_EQ(reassemble(p), jpeg);
}

TEST(JpegCodec, ZeroBlock) {
  Bytes jpeg = testing::encode_jpeg(testing::flat_image(8, 8, 1, 128), {.quality = 90});
  const ParsedJpeg p = parse_jpeg(jpeg);
  EXPECT_EQ(p.channels[0].blocks[0], QuantizedBlock{});
}

TEST(JpegCodec, Classification) {
  const testing::Image photo = testing::crop(testing::load_photo("china.jpg"), 0, 0, 64, 48);
  EXPECT_EQ(classify(testing::encode_jpeg(photo, {.subsampling = Subsampling::k420})),
            Verdict::kAccept);
  EXPECT_EQ(classify(testing::encode_jpeg(photo, {.progressive = true})), Verdict::kProgressive);
  EXPECT_EQ(classify(testing::encode_jpeg(photo, {.subsampling = Subsampling::k411})),
            Verdict::kChromaSubsampleBig);
  testing::Image cmyk = testing::noise_image(32, 32, 4, 3);
  EXPECT_EQ(classify(testing::encode_jpeg(cmyk, {})), Verdict::kFourColorCmyk);

  std::mt19937 rng(9);
  for (int i = 0; i < 50; ++i) {
    Bytes junk(200 + i);
    for (auto& b : junk) b = static_cast<uint8_t>(rng());
    junk[0] = 0xFF;
    junk[1] = 0xD8;
    junk[2] = 0x12;
    EXPECT_EQ(classify(junk), Verdict::kNotAnImage);
  }
  EXPECT_EQ(classify(Bytes{0x89, 'P', 'N', 'G'}), Verdict::kNotAnImage);
  EXPECT_EQ(parse_error(testing::encode_jpeg(photo, {.progressive = true})), ErrorCode::kProgressive);
}

struct Variant {
  int w, h;
  EncodeOptions opt;
};

std::vector<Variant> variants() {
  std::vector<Variant> v;
  for (Subsampling s : {Subsampling::k444, Subsampling::k422, Subsampling::k420, Subsampling::k440,
                        Subsampling::kGray}) {
    for (int q : {50, 75, 95}) {
      v.push_back({61, 37, {.quality = q, .subsampling = s}});
      v.push_back({128, 96, {.quality = q, .subsampling = s, .restart_interval = 3}});
      v.push_back({100, 81, {.quality = q, .subsampling = s, .restart_rows = 1, .optimize_coding = true}});
    }
  }
  return v;
}

TEST(JpegCodec, RoundTripVariants) {
  const testing::Image photo = testing::load_photo("coffee.jpg");
  uint32_t seed = 1;
  for (const Variant& var : variants()) {
    for (int src = 0; src < 3; ++src) {
      testing::Image img = src == 0   ? testing::crop(photo, 50 + seed % 200, 20, var.w, var.h)
                           : src == 1 ? testing::gradient_image(var.w, var.h, 3, seed)
                                      : testing::noise_image(var.w, var.h, 3, seed);
      ++seed;
      const Bytes jpeg = testing::encode_jpeg(img, var.opt);
      const ParsedJpeg p = parse_jpeg(jpeg);
      EXPECT_FALSE(p.truncated);
      ASSERT_EQ(reassemble(p), jpeg) << "q" << var.opt.quality << " src " << src;
      EXPECT_EQ(p.header.restart_interval > 0 ? p.rst_count > 0 : p.rst_count == 0, true);
    }
  }
}

TEST(JpegCodec, HandoverSplitAtEveryRow) {
  const testing::Image photo = testing::crop(testing::load_photo("flower.jpg"), 100, 100, 120, 90);
  for (EncodeOptions opt : {EncodeOptions{.subsampling = Subsampling::k420},
                            EncodeOptions{.quality = 70, .subsampling = Subsampling::kGray,
                                          .restart_interval = 5}}) {
    const Bytes jpeg = testing::encode_jpeg(photo, opt);
    const ParsedJpeg p = parse_jpeg(jpeg);
    const ScanEncodeParams params{p.pad_bit, p.rst_count};
    const int rows = p.header.mcu_rows;
    const Bytes whole = encode_scan(p.header, p.channels, params, {}, 0, rows);
    for (int r = 0; r <= rows; ++r) {
      Bytes first = encode_scan(p.header, p.channels, params, {}, 0, r);
      const HuffmanHandover mid = r < rows ? p.rows[r].handover : HuffmanHandover{};
      if (r < rows) EXPECT_EQ(p.rows[r].byte_offset, p.header.header_size + first.size());
      Bytes second = encode_scan(p.header, p.channels, params, mid, r, rows);
      first.insert(first.end(), second.begin(), second.end());
      EXPECT_EQ(first, whole) << "split at row " << r;
    }
  }
}

TEST(JpegCodec, RstCountLimitsEmittedMarkers) {
  // 6 MCUs with an interval of 1 gives 5 markers in the original.
  const testing::Image img = testing::gradient_image(48, 8, 1, 4);
  const Bytes jpeg = testing::encode_jpeg(img, {.restart_interval = 1});
  const ParsedJpeg p = parse_jpeg(jpeg);
  ASSERT_EQ(p.rst_count, 5u);
  EXPECT_EQ(count_rst(ByteSpan(jpeg).subspan(p.header.header_size)), 5);

  const Bytes scan3 = encode_scan(p.header, p.channels, {p.pad_bit, 3}, {}, 0, p.header.mcu_rows);
  EXPECT_EQ(count_rst(scan3), 3);
  Bytes cut = p.header_bytes;
  cut.insert(cut.end(), scan3.begin(), scan3.end());
  cut.push_back(0xFF);
  cut.push_back(0xD9);
  const ParsedJpeg q = parse_jpeg(cut);
  EXPECT_EQ(q.rst_count, 3u);
  for (size_t i = 0; i < p.channels[0].blocks.size(); ++i) {
    EXPECT_EQ(q.channels[0].blocks[i], p.channels[0].blocks[i]);
  }
  EXPECT_EQ(reassemble(q), cut);
}

TEST(JpegCodec, ZeroPadBitIsDetected) {
  const testing::Image img = testing::crop(testing::load_photo("rocket.jpg"), 0, 0, 40, 40);
  const Bytes jpeg = testing::encode_jpeg(img, {.restart_interval = 2});
  const ParsedJpeg p = parse_jpeg(jpeg);
  const Bytes scan0 = encode_scan(p.header, p.channels, {0, p.rst_count}, {}, 0, p.header.mcu_rows);
  Bytes alt = p.header_bytes;
  alt.insert(alt.end(), scan0.begin(), scan0.end());
  alt.push_back(0xFF);
  alt.push_back(0xD9);
  const ParsedJpeg q = parse_jpeg(alt);
  EXPECT_EQ(q.pad_bit, 0);
  EXPECT_EQ(reassemble(q), alt);
}

TEST(JpegCodec, TruncatedFilesReproduceTheirPrefix) {
  const testing::Image img = testing::crop(testing::load_photo("chelsea.jpg"), 0, 0, 96, 64);
  const Bytes jpeg = testing::encode_jpeg(img, {.subsampling = Subsampling::k422});
  const size_t header = parse_header(jpeg).header_size;
  int parsed = 0;
  for (size_t cut = header + 1; cut < jpeg.size(); cut += 37) {
    const Bytes t(jpeg.begin(), jpeg.begin() + cut);
    try {
      const ParsedJpeg p = parse_jpeg(t);
      EXPECT_TRUE(p.truncated);
      EXPECT_EQ(reassemble(p), t) << "cut at " << cut;
      ++parsed;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kUnsupportedJpeg || e.code() == ErrorCode::kAcValuesOutOfRange)
          << error_code_name(e.code());
    }
  }
  EXPECT_GT(parsed, 0);
}

TEST(JpegCodec, GarbageAfterEoiAndBeforeIt) {
  const testing::Image img = testing::gradient_image(33, 17, 3, 8);
  Bytes trailing(300);
  for (size_t i = 0; i < trailing.size(); ++i) trailing[i] = static_cast<uint8_t>(i * 7);
  const Bytes jpeg = testing::encode_jpeg(img, {.trailing = trailing});
  const ParsedJpeg p = parse_jpeg(jpeg);
  EXPECT_EQ(p.append_garbage, trailing);
  EXPECT_EQ(reassemble(p), jpeg);

  // No EOI at all: the tail after the scan is kept as is.
  const Bytes no_eoi(jpeg.begin(), jpeg.begin() + p.scan_end);
  const ParsedJpeg q = parse_jpeg(no_eoi);
  EXPECT_FALSE(q.has_eoi);
  EXPECT_EQ(reassemble(q), no_eoi);
}

}  // namespace
}  // namespace lepton
