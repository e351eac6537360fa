#include "lepton/container.h"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <string_view>

#include "lepton/error.h"

#ifndef LEPTON_BUILD_ID
#define LEPTON_BUILD_ID ""
#endif

namespace lepton {
namespace {

// Bound on the inflated header section; real headers are far smaller.
constexpr size_t kMaxHeaderSection = size_t{1} << 28;

enum LengthClass : uint8_t { k256 = 0, k4096 = 1, k65536 = 2, kExplicit = 3 };

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    u8(static_cast<uint8_t>(v));
    u8(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    u16(static_cast<uint16_t>(v));
    u16(static_cast<uint16_t>(v >> 16));
  }
  void bytes(ByteSpan b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void blob(ByteSpan b) {
    u32(checked_u32(b.size()));
    bytes(b);
  }

  static uint32_t checked_u32(uint64_t v) {
    if (v > 0xFFFFFFFFu) fail(ErrorCode::kSizeOverflow, "field exceeds 4 GiB");
    return static_cast<uint32_t>(v);
  }

 private:
  Bytes& out_;
};

// Reads the inflated header section; any overrun means a corrupt header.
class Reader {
 public:
  explicit Reader(ByteSpan in) : in_(in) {}
  uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  uint16_t u16() {
    const uint16_t lo = u8();
    return static_cast<uint16_t>(lo | (u8() << 8));
  }
  uint32_t u32() {
    const uint32_t lo = u16();
    return lo | (static_cast<uint32_t>(u16()) << 16);
  }
  Bytes bytes(size_t n) {
    need(n);
    Bytes b(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return b;
  }
  Bytes blob() { return bytes(u32()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) fail(ErrorCode::kCorruptHeader, "header section too short");
  }
  ByteSpan in_;
  size_t pos_ = 0;
};

uint16_t le16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t le32(const uint8_t* p) { return le16(p) | (static_cast<uint32_t>(le16(p + 2)) << 16); }

Bytes deflate_bytes(ByteSpan in) {
  uLongf size = compressBound(static_cast<uLong>(in.size()));
  Bytes out(size);
  if (compress2(out.data(), &size, in.data(), static_cast<uLong>(in.size()), 9) != Z_OK) {
    fail(ErrorCode::kInternal, "zlib compress failed");
  }
  out.resize(size);
  return out;
}

Bytes inflate_bytes(ByteSpan in) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) fail(ErrorCode::kInternal, "inflateInit failed");
  Bytes out;
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (out.size() >= kMaxHeaderSection) break;
    const size_t old = out.size();
    out.resize(old + 16384);
    zs.next_out = out.data() + old;
    zs.avail_out = 16384;
    rc = inflate(&zs, Z_NO_FLUSH);
    out.resize(out.size() - zs.avail_out);
    if (rc != Z_OK && rc != Z_STREAM_END) break;
  }
  const bool clean = rc == Z_STREAM_END && zs.avail_in == 0;
  inflateEnd(&zs);
  if (!clean) fail(ErrorCode::kCorruptHeader, "header section does not inflate");
  return out;
}

}  // namespace

BuildId this_build_id() {
  BuildId id{};
  std::string_view s = LEPTON_BUILD_ID;
  if (s.empty()) s = "unversioned";
  std::memcpy(id.data(), s.data(), std::min(s.size(), id.size()));
  return id;
}

uint16_t pack_handover_word(const HuffmanHandover& h) {
  return static_cast<uint16_t>((h.bit_offset & 7) | (h.partial_byte << 8));
}

void unpack_handover_word(uint16_t word, HuffmanHandover& h) {
  if (word & 0xF8) fail(ErrorCode::kCorruptHeader, "reserved handover bits set");
  h.bit_offset = static_cast<uint8_t>(word & 7);
  h.partial_byte = static_cast<uint8_t>(word >> 8);
  if (h.bit_offset == 0 && h.partial_byte != 0) fail(ErrorCode::kCorruptHeader, "stray partial byte");
}

Bytes serialize_header_section(const HeaderSection& h) {
  if (h.pad_bit > 1) fail(ErrorCode::kInternal, "pad bit must be 0 or 1");
  Bytes raw;
  Writer w(raw);
  w.blob(h.jpeg_header);
  w.u8(h.pad_bit ? 0xFF : 0x00);
  w.u8(static_cast<uint8_t>(h.segments.size()));
  for (const SegmentInfo& s : h.segments) {
    w.u16(s.start_row);
    w.u32(s.output_size);
    w.u16(pack_handover_word(s.handover));
    for (int c = 0; c < 4; ++c) {
      w.u16(static_cast<uint16_t>(c < kMaxChannels ? s.handover.prev_dc[c] : 0));
    }
  }
  w.u32(h.rst_count);
  w.u8(static_cast<uint8_t>(h.blocks_per_channel.size()));
  for (uint32_t b : h.blocks_per_channel) w.u32(b);
  w.blob(h.prepend);
  w.blob(h.append);
  w.u32(h.window_offset);
  w.u32(h.stream_offset);
  w.u16(h.end_row);
  return raw;
}

Bytes compress_header(const HeaderSection& h) { return deflate_bytes(serialize_header_section(h)); }

HeaderSection decompress_header(ByteSpan zlib_data) { return parse_header_section(inflate_bytes(zlib_data)); }

HeaderSection parse_header_section(ByteSpan raw) {
  Reader r(raw);
  HeaderSection h;
  h.jpeg_header = r.blob();
  const uint8_t pad = r.u8();
  if (pad != 0x00 && pad != 0xFF) fail(ErrorCode::kCorruptHeader, "pad bit byte must be 0x00 or 0xFF");
  h.pad_bit = pad ? 1 : 0;
  const int nseg = r.u8();
  if (nseg < 1 || nseg > kMaxSegments) fail(ErrorCode::kCorruptHeader, "bad segment count");
  h.segments.resize(nseg);
  for (SegmentInfo& s : h.segments) {
    s.start_row = r.u16();
    s.output_size = r.u32();
    unpack_handover_word(r.u16(), s.handover);
    for (int c = 0; c < 4; ++c) {
      const auto dc = static_cast<int16_t>(r.u16());
      if (c < kMaxChannels) {
        s.handover.prev_dc[c] = dc;
      } else if (dc != 0) {
        fail(ErrorCode::kCorruptHeader, "fourth DC slot must be zero");
      }
    }
  }
  h.rst_count = r.u32();
  const int nch = r.u8();
  if (nch > kMaxChannels) fail(ErrorCode::kCorruptHeader, "too many channels");
  h.blocks_per_channel.resize(nch);
  for (uint32_t& b : h.blocks_per_channel) b = r.u32();
  h.prepend = r.blob();
  h.append = r.blob();
  h.window_offset = r.u32();
  h.stream_offset = r.u32();
  h.end_row = r.u16();
  if (!r.done()) fail(ErrorCode::kCorruptHeader, "trailing bytes in header section");
  return h;
}

std::vector<CodedSection> interleave(const std::vector<Bytes>& streams) {
  std::vector<CodedSection> out;
  size_t rounds = 0;
  for (const Bytes& s : streams) rounds = std::max(rounds, (s.size() + kSectionSize - 1) / kSectionSize);
  for (size_t k = 0; k < rounds; ++k) {
    for (size_t i = 0; i < streams.size(); ++i) {
      const size_t begin = k * kSectionSize;
      if (begin >= streams[i].size()) continue;
      const size_t end = std::min(streams[i].size(), begin + kSectionSize);
      out.push_back({static_cast<uint8_t>(i), Bytes(streams[i].begin() + begin, streams[i].begin() + end)});
    }
  }
  return out;
}

void append_section(Bytes& out, const CodedSection& s) {
  if (s.segment >= kMaxSegments) fail(ErrorCode::kInternal, "segment id does not fit");
  const size_t n = s.payload.size();
  Writer w(out);
  if (n == 256) {
    w.u8(static_cast<uint8_t>(s.segment | (k256 << 4)));
  } else if (n == 4096) {
    w.u8(static_cast<uint8_t>(s.segment | (k4096 << 4)));
  } else if (n == 65536) {
    w.u8(static_cast<uint8_t>(s.segment | (k65536 << 4)));
  } else if (n >= 1 && n < 65536) {
    w.u8(static_cast<uint8_t>(s.segment | (kExplicit << 4)));
    w.u16(static_cast<uint16_t>(n));
  } else {
    fail(ErrorCode::kInternal, "section length not encodable");
  }
  w.bytes(s.payload);
}

Bytes write_container(const Container& c) {
  if (c.streams.empty() || c.streams.size() > kMaxSegments) fail(ErrorCode::kInternal, "bad segment count");
  if (c.section.segments.size() != c.streams.size()) fail(ErrorCode::kInternal, "segment info mismatch");
  const Bytes zdata = compress_header(c.section);
  Bytes out;
  Writer w(out);
  w.u8(kMagic0);
  w.u8(kMagic1);
  w.u8(kFormatVersion);
  w.u8(c.header.header_flag);
  w.u32(static_cast<uint32_t>(c.streams.size()));
  w.bytes(c.header.build_id);
  w.u32(c.header.output_size);
  w.u32(Writer::checked_u32(zdata.size()));
  w.bytes(zdata);
  for (const CodedSection& s : interleave(c.streams)) append_section(out, s);
  return out;
}

size_t SpanInput::read(uint8_t* dst, size_t n) {
  const size_t k = std::min(n, data_.size() - pos_);
  std::memcpy(dst, data_.data() + pos_, k);
  pos_ += k;
  return k;
}

ContainerReader::ContainerReader(Input& in) : in_(in) {
  uint8_t fixed[kFixedHeaderSize];
  const size_t got = in_.read(fixed, 2);
  if (got < 2 || fixed[0] != kMagic0 || fixed[1] != kMagic1) fail(ErrorCode::kBadMagic, "not a container");
  read_exact(fixed + 2, kFixedHeaderSize - 2);
  if (fixed[2] != kFormatVersion) fail(ErrorCode::kUnsupportedVersion, "unknown container version");
  header_.header_flag = fixed[3];
  if (header_.header_flag == 'Z') fail(ErrorCode::kUnsupportedFeature, "header-skip mode is not supported");
  if (header_.header_flag != 'Y') fail(ErrorCode::kCorruptHeader, "unknown header flag");
  header_.num_segments = le32(fixed + 4);
  std::memcpy(header_.build_id.data(), fixed + 8, 12);
  header_.output_size = le32(fixed + 20);
  header_.zlib_size = le32(fixed + 24);
  if (header_.num_segments < 1 || header_.num_segments > kMaxSegments) {
    fail(ErrorCode::kCorruptHeader, "bad segment count");
  }
  if (header_.zlib_size > kMaxHeaderSection) fail(ErrorCode::kCorruptHeader, "header section too large");
  Bytes z(header_.zlib_size);
  read_exact(z.data(), z.size());
  section_ = decompress_header(z);
  if (section_.segments.size() != header_.num_segments) {
    fail(ErrorCode::kCorruptHeader, "segment count disagrees with header section");
  }
}

void ContainerReader::read_exact(uint8_t* dst, size_t n) {
  if (in_.read(dst, n) != n) fail(ErrorCode::kTruncatedContainer, "container ends early");
}

bool ContainerReader::next_section(CodedSection& out) {
  uint8_t tag;
  if (in_.read(&tag, 1) == 0) return false;
  out.segment = tag & 0x0F;
  if (out.segment >= header_.num_segments) fail(ErrorCode::kBadSegmentId, "section for unknown segment");
  size_t n = 0;
  switch (tag >> 4) {
    case k256: n = 256; break;
    case k4096: n = 4096; break;
    case k65536: n = 65536; break;
    case kExplicit: {
      uint8_t len[2];
      read_exact(len, 2);
      n = le16(len);
      if (n == 0) fail(ErrorCode::kCorruptHeader, "empty section");
      break;
    }
    default: fail(ErrorCode::kCorruptHeader, "unknown section length class");
  }
  out.payload.resize(n);
  read_exact(out.payload.data(), n);
  return true;
}

void Demuxer::push(const CodedSection& s) {
  if (s.segment >= queues_.size()) fail(ErrorCode::kBadSegmentId, "section for unknown segment");
  Bytes& q = queues_[s.segment];
  q.insert(q.end(), s.payload.begin(), s.payload.end());
}

std::vector<Bytes> Demuxer::take_all() { return std::move(queues_); }

Container read_container(ByteSpan bytes) {
  SpanInput in(bytes);
  ContainerReader reader(in);
  Container c;
  c.header = reader.header();
  c.section = reader.section();
  Demuxer demux(c.header.num_segments);
  CodedSection s;
  while (reader.next_section(s)) demux.push(s);
  c.streams = demux.take_all();
  return c;
}

}  // namespace lepton
