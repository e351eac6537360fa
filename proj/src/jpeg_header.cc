#include <algorithm>
#include <string>

#include "lepton/error.h"
#include "lepton/jpeg_codec.h"

namespace lepton {

const std::array<uint8_t, 64> kZigzagToNatural = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

namespace {

// Markers.
constexpr uint8_t kSof0 = 0xC0;
constexpr uint8_t kSof1 = 0xC1;
constexpr uint8_t kSof2 = 0xC2;
constexpr uint8_t kDht = 0xC4;
constexpr uint8_t kSoi = 0xD8;
constexpr uint8_t kEoi = 0xD9;
constexpr uint8_t kSos = 0xDA;
constexpr uint8_t kDqt = 0xDB;
constexpr uint8_t kDri = 0xDD;

uint16_t be16(ByteSpan b, size_t pos) {
  return static_cast<uint16_t>((b[pos] << 8) | b[pos + 1]);
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

void check_huffman_table(const HuffmanTable& t) {
  int total = 0;
  uint32_t code = 0;
  for (int len = 1; len <= 16; ++len) {
    code += t.counts[len - 1];
    total += t.counts[len - 1];
    if (code > (1u << len)) fail(ErrorCode::kUnsupportedJpeg, "oversubscribed Huffman table");
    code <<= 1;
  }
  if (total == 0 || total > 256) fail(ErrorCode::kUnsupportedJpeg, "bad Huffman table size");
}

void parse_dht(ByteSpan seg, JpegHeader& h) {
  size_t p = 0;
  while (p < seg.size()) {
    const uint8_t tc = seg[p] >> 4;
    const uint8_t th = seg[p] & 15;
    if (tc > 1 || th > 3) fail(ErrorCode::kUnsupportedJpeg, "bad DHT class/id");
    if (p + 17 > seg.size()) fail(ErrorCode::kNotAnImage, "truncated DHT");
    HuffmanTable t;
    int total = 0;
    for (int i = 0; i < 16; ++i) {
      t.counts[i] = seg[p + 1 + i];
      total += t.counts[i];
    }
    p += 17;
    if (p + total > seg.size()) fail(ErrorCode::kNotAnImage, "truncated DHT symbols");
    t.symbols.assign(seg.begin() + p, seg.begin() + p + total);
    p += total;
    t.defined = true;
    check_huffman_table(t);
    (tc == 0 ? h.dc_tables : h.ac_tables)[th] = std::move(t);
  }
}

void parse_dqt(ByteSpan seg, JpegHeader& h, std::array<bool, 4>& defined) {
  size_t p = 0;
  while (p < seg.size()) {
    const uint8_t pq = seg[p] >> 4;
    const uint8_t tq = seg[p] & 15;
    if (pq > 1 || tq > 3) fail(ErrorCode::kUnsupportedJpeg, "bad DQT precision/id");
    const size_t need = 1 + 64 * (pq + 1);
    if (p + need > seg.size()) fail(ErrorCode::kNotAnImage, "truncated DQT");
    for (int k = 0; k < 64; ++k) {
      const uint16_t q = pq ? be16(seg, p + 1 + 2 * k) : seg[p + 1 + k];
      h.quant_tables[tq][kZigzagToNatural[k]] = q;
    }
    defined[tq] = true;
    p += need;
  }
}

struct FrameComponent {
  uint8_t id, h, v, tq;
};

}  // namespace

JpegHeader parse_header(ByteSpan bytes) {
  if (bytes.size() < 4 || bytes[0] != 0xFF || bytes[1] != kSoi) {
    fail(ErrorCode::kNotAnImage, "missing SOI marker");
  }
  JpegHeader h;
  std::vector<FrameComponent> frame;
  std::array<bool, 4> quant_defined{};
  bool have_sof = false;
  size_t pos = 2;
  for (;;) {
    if (pos >= bytes.size() || bytes[pos] != 0xFF) {
      fail(ErrorCode::kNotAnImage, "expected marker at offset " + std::to_string(pos));
    }
    while (pos < bytes.size() && bytes[pos] == 0xFF) ++pos;  // fill bytes
    if (pos >= bytes.size()) fail(ErrorCode::kNotAnImage, "truncated marker");
    const uint8_t marker = bytes[pos++];
    if (marker == kSoi || marker == kEoi || marker == 0x00 || marker == 0x01 ||
        (marker >= 0xD0 && marker <= 0xD7)) {
      fail(ErrorCode::kNotAnImage, "unexpected standalone marker before scan");
    }
    if (pos + 2 > bytes.size()) fail(ErrorCode::kNotAnImage, "truncated segment length");
    const uint16_t len = be16(bytes, pos);
    if (len < 2 || pos + len > bytes.size()) fail(ErrorCode::kNotAnImage, "truncated segment");
    const ByteSpan seg = bytes.subspan(pos + 2, len - 2);
    const size_t next = pos + len;

    switch (marker) {
      case kSof0:
      case kSof1: {
        if (have_sof) fail(ErrorCode::kUnsupportedJpeg, "multiple frames");
        if (seg.size() < 6) fail(ErrorCode::kNotAnImage, "short SOF");
        if (seg[0] != 8) fail(ErrorCode::kUnsupportedJpeg, "sample precision is not 8 bits");
        h.height = be16(seg, 1);
        h.width = be16(seg, 3);
        const int n = seg[5];
        if (seg.size() < 6u + 3u * n) fail(ErrorCode::kNotAnImage, "short SOF components");
        if (n == 4) fail(ErrorCode::kFourColorCmyk, "four-component image");
        if (n != 1 && n != 3) fail(ErrorCode::kUnsupportedJpeg, "unsupported component count");
        if (h.width == 0) fail(ErrorCode::kNotAnImage, "zero width");
        if (h.height == 0) fail(ErrorCode::kUnsupportedJpeg, "DNL-defined height");
        for (int i = 0; i < n; ++i) {
          FrameComponent fc{seg[6 + 3 * i], static_cast<uint8_t>(seg[7 + 3 * i] >> 4),
                            static_cast<uint8_t>(seg[7 + 3 * i] & 15), seg[8 + 3 * i]};
          if (fc.h == 0 || fc.v == 0 || fc.h > 4 || fc.v > 4 || fc.tq > 3) {
            fail(ErrorCode::kNotAnImage, "bad sampling factors");
          }
          if (fc.h > 2 || fc.v > 2) fail(ErrorCode::kChromaSubsampleBig, "sampling factor above 2");
          frame.push_back(fc);
        }
        h.frame_components = n;
        have_sof = true;
        break;
      }
      case kSof2:
      case 0xC6:
      case 0xCA:
      case 0xCE:
        fail(ErrorCode::kProgressive, "progressive JPEG");
      case 0xC3:
      case 0xC5:
      case 0xC7:
      case 0xC8:
      case 0xC9:
      case 0xCB:
      case 0xCC:
      case 0xCD:
      case 0xCF:
        fail(ErrorCode::kUnsupportedJpeg, "unsupported coding process");
      case 0xDC:
      case 0xDE:
      case 0xDF:
        fail(ErrorCode::kUnsupportedJpeg, "unsupported marker");
      case kDht:
        parse_dht(seg, h);
        break;
      case kDqt:
        parse_dqt(seg, h, quant_defined);
        break;
      case kDri:
        if (seg.size() < 2) fail(ErrorCode::kNotAnImage, "short DRI");
        h.restart_interval = be16(seg, 0);
        break;
      case kSos: {
        if (!have_sof) fail(ErrorCode::kNotAnImage, "scan before frame header");
        if (seg.empty()) fail(ErrorCode::kNotAnImage, "short SOS");
        const int n = seg[0];
        if (seg.size() < 1u + 2u * n + 3u) fail(ErrorCode::kNotAnImage, "short SOS");
        if (n != h.frame_components) {
          fail(ErrorCode::kUnsupportedJpeg, "scan does not cover every component");
        }
        const uint8_t ss = seg[1 + 2 * n], se = seg[2 + 2 * n], a = seg[3 + 2 * n];
        if (ss != 0 || se != 63 || a != 0) fail(ErrorCode::kProgressive, "spectral selection scan");
        int hmax = 1, vmax = 1;
        for (const auto& fc : frame) {
          hmax = std::max<int>(hmax, fc.h);
          vmax = std::max<int>(vmax, fc.v);
        }
        for (int i = 0; i < n; ++i) {
          const uint8_t id = seg[1 + 2 * i];
          const uint8_t tables = seg[2 + 2 * i];
          auto it = std::find_if(frame.begin(), frame.end(),
                                 [id](const FrameComponent& fc) { return fc.id == id; });
          if (it == frame.end()) fail(ErrorCode::kNotAnImage, "scan references unknown component");
          ScanComponent sc;
          sc.id = id;
          sc.frame_index = static_cast<uint8_t>(it - frame.begin());
          sc.h = it->h;
          sc.v = it->v;
          sc.quant_index = it->tq;
          sc.dc_table = tables >> 4;
          sc.ac_table = tables & 15;
          if (sc.dc_table > 3 || sc.ac_table > 3 || !h.dc_tables[sc.dc_table].defined ||
              !h.ac_tables[sc.ac_table].defined) {
            fail(ErrorCode::kUnsupportedJpeg, "scan references undefined Huffman table");
          }
          if (!quant_defined[sc.quant_index]) fail(ErrorCode::kUnsupportedJpeg, "undefined quant table");
          for (uint16_t q : h.quant_tables[sc.quant_index]) {
            if (q == 0) fail(ErrorCode::kUnsupportedJpeg, "zero quantizer");
          }
          for (const auto& other : h.components) {
            if (other.id == id) fail(ErrorCode::kNotAnImage, "duplicate scan component");
          }
          h.components.push_back(sc);
        }
        if (n == 1) {
          auto& c = h.components[0];
          c.width_blocks = ceil_div(ceil_div(h.width * c.h, hmax), 8);
          c.height_blocks = ceil_div(ceil_div(h.height * c.v, vmax), 8);
          c.mcu_h = c.mcu_v = 1;
          h.mcu_cols = c.width_blocks;
          h.mcu_rows = c.height_blocks;
        } else {
          h.mcu_cols = ceil_div(h.width, 8 * hmax);
          h.mcu_rows = ceil_div(h.height, 8 * vmax);
          int blocks_per_mcu = 0;
          for (auto& c : h.components) {
            c.mcu_h = c.h;
            c.mcu_v = c.v;
            c.width_blocks = h.mcu_cols * c.h;
            c.height_blocks = h.mcu_rows * c.v;
            blocks_per_mcu += c.h * c.v;
          }
          if (blocks_per_mcu > 10) fail(ErrorCode::kUnsupportedJpeg, "too many blocks per MCU");
        }
        h.header_size = next;
        return h;
      }
      default:
        break;  // APPn, COM and friends are carried verbatim
    }
    pos = next;
  }
}

Verdict classify(ByteSpan bytes) {
  try {
    parse_header(bytes);
    return Verdict::kAccept;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kProgressive: return Verdict::kProgressive;
      case ErrorCode::kFourColorCmyk: return Verdict::kFourColorCmyk;
      case ErrorCode::kChromaSubsampleBig: return Verdict::kChromaSubsampleBig;
      case ErrorCode::kNotAnImage: return Verdict::kNotAnImage;
      default: return Verdict::kUnsupportedJpeg;
    }
  }
}

}  // namespace lepton
