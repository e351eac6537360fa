#include <algorithm>
#include <array>
#include <optional>
#include <string>

#include "lepton/error.h"
#include "lepton/jpeg_codec.h"

namespace lepton {
namespace {

constexpr int kLookaheadBits = 9;

class HuffmanDecoder {
 public:
  explicit HuffmanDecoder(const HuffmanTable& table) : symbols_(table.symbols) {
    fast_.fill(0);
    maxcode_.fill(-1);
    int32_t code = 0;
    int k = 0;
    for (int len = 1; len <= 16; ++len) {
      valoffset_[len] = k - code;
      for (int i = 0; i < table.counts[len - 1]; ++i, ++k, ++code) {
        if (len <= kLookaheadBits) {
          const int shift = kLookaheadBits - len;
          for (int fill = 0; fill < (1 << shift); ++fill) {
            fast_[(code << shift) | fill] = static_cast<uint16_t>((len << 8) | table.symbols[k]);
          }
        }
      }
      if (table.counts[len - 1] != 0) maxcode_[len] = code - 1;
      code <<= 1;
    }
  }

  // `peek` holds the next 16 bits of the stream, MSB first. Returns the
  // symbol and stores the code length, or -1 for an invalid code.
  int decode(uint32_t peek, int* length) const {
    const uint16_t e = fast_[peek >> (16 - kLookaheadBits)];
    if (e != 0) {
      *length = e >> 8;
      return e & 0xFF;
    }
    for (int len = kLookaheadBits + 1; len <= 16; ++len) {
      const int32_t code = static_cast<int32_t>(peek >> (16 - len));
      if (code <= maxcode_[len]) {
        *length = len;
        return symbols_[code + valoffset_[len]];
      }
    }
    return -1;
  }

 private:
  std::array<uint16_t, 1 << kLookaheadBits> fast_{};
  std::array<int32_t, 17> maxcode_{};
  std::array<int32_t, 17> valoffset_{};
  std::vector<uint8_t> symbols_;
};

// Reads entropy-coded bits, removing byte stuffing. At a marker or at the
// end of input it keeps supplying zero bytes ("virtual" bytes) so that
// lookahead never fails; consuming a virtual bit is recorded as overrun.
class ScanBitReader {
 public:
  ScanBitReader(ByteSpan data, size_t start) : data_(data), pos_(start) {}

  void fill() {
    while (nbits_ <= 56) {
      uint8_t b = 0;
      uint64_t offset;
      bool real = false;
      if (!stopped_) {
        if (pos_ < data_.size() && data_[pos_] != 0xFF) {
          b = data_[pos_];
          offset = pos_++;
          real = true;
        } else if (pos_ + 1 < data_.size() && data_[pos_ + 1] == 0x00) {
          b = 0xFF;
          offset = pos_;
          pos_ += 2;
          real = true;
        } else {
          stopped_ = true;
          virtual_offset_ = pos_;
        }
      }
      if (!real) offset = virtual_offset_++;
      ring_[fetched_ & 15] = {offset, b};
      ++fetched_;
      buf_ |= static_cast<uint64_t>(b) << (56 - nbits_);
      nbits_ += 8;
      if (real) real_bits_ += 8;
    }
  }

  uint32_t peek16() const { return static_cast<uint32_t>(buf_ >> 48); }

  void consume(int n) {
    if (n > real_bits_) {
      overrun_ = true;
      real_bits_ = 0;
    } else {
      real_bits_ -= n;
    }
    buf_ <<= n;
    nbits_ -= n;
  }

  uint32_t get_bits(int n) {
    if (n == 0) return 0;
    const uint32_t v = static_cast<uint32_t>(buf_ >> (64 - n));
    consume(n);
    return v;
  }

  // Current position in writer terms.
  RowMark mark() const {
    RowMark m;
    const int whole = nbits_ / 8;
    const int rem = nbits_ % 8;
    if (rem != 0) {
      const Fetched& f = ring_[(fetched_ - whole - 1) & 15];
      m.byte_offset = f.offset;
      m.handover.bit_offset = static_cast<uint8_t>(8 - rem);
      m.handover.partial_byte = static_cast<uint8_t>(f.value & (0xFF << rem));
    } else if (whole > 0) {
      m.byte_offset = ring_[(fetched_ - whole) & 15].offset;
    } else {
      m.byte_offset = stopped_ ? virtual_offset_ : pos_;
    }
    return m;
  }

  // Bits remaining in the partially consumed byte, and their values.
  int pending_pad_bits() const { return nbits_ % 8; }
  bool pad_bits_real() const { return real_bits_ >= nbits_ % 8 && real_bits_ > 0; }
  uint32_t pad_value() const {
    const int r = nbits_ % 8;
    return r == 0 ? 0 : static_cast<uint32_t>(buf_ >> (64 - r));
  }

  // True if only the partial byte remains before a marker at pos_.
  bool at_marker_after_partial() const {
    return stopped_ && real_bits_ == nbits_ % 8 && pos_ + 1 < data_.size() &&
           data_[pos_] == 0xFF;
  }
  uint8_t marker_code() const { return data_[pos_ + 1]; }

  void skip_marker() {
    pos_ += 2;
    buf_ = 0;
    nbits_ = 0;
    real_bits_ = 0;
    stopped_ = false;
  }

  bool overrun() const { return overrun_; }
  bool stopped_at_eof() const { return stopped_ && pos_ >= data_.size(); }

 private:
  struct Fetched {
    uint64_t offset = 0;
    uint8_t value = 0;
  };

  ByteSpan data_;
  size_t pos_;
  uint64_t buf_ = 0;
  int nbits_ = 0;
  int real_bits_ = 0;
  bool stopped_ = false;
  bool overrun_ = false;
  uint64_t virtual_offset_ = 0;
  std::array<Fetched, 16> ring_{};
  uint64_t fetched_ = 0;
};

int extend(uint32_t v, int s) {
  return v < (1u << (s - 1)) ? static_cast<int>(v) - (1 << s) + 1 : static_cast<int>(v);
}

class ScanDecoder {
 public:
  ScanDecoder(const JpegHeader& h, ByteSpan bytes)
      : h_(h), reader_(bytes, h.header_size) {
    for (int t = 0; t < 4; ++t) {
      if (h.dc_tables[t].defined) dc_[t].emplace(h.dc_tables[t]);
      if (h.ac_tables[t].defined) ac_[t].emplace(h.ac_tables[t]);
    }
  }

  ScanDecodeResult run() {
    ScanDecodeResult res;
    for (const auto& c : h_.components) {
      CoefficientPlane p;
      p.width_blocks = c.width_blocks;
      p.height_blocks = c.height_blocks;
      p.h_samp = c.mcu_h;
      p.v_samp = c.mcu_v;
      p.blocks.resize(static_cast<size_t>(c.width_blocks) * c.height_blocks);
      res.planes.push_back(std::move(p));
    }
    res.rows.reserve(h_.mcu_rows);
    const int ri = h_.restart_interval;
    bool markers_active = ri > 0;
    uint32_t rst_count = 0;
    const size_t ncomp = h_.components.size();

    for (int my = 0; my < h_.mcu_rows; ++my) {
      for (int mx = 0; mx < h_.mcu_cols; ++mx) {
        reader_.fill();
        if (mx == 0) {
          RowMark m = reader_.mark();
          for (size_t c = 0; c < ncomp; ++c) m.handover.prev_dc[c] = prev_dc_[c];
          res.rows.push_back(m);
        }
        const uint64_t mcu = static_cast<uint64_t>(my) * h_.mcu_cols + mx;
        if (markers_active && mcu > 0 && mcu % ri == 0) {
          const uint8_t expected = static_cast<uint8_t>(0xD0 + (rst_count & 7));
          if (reader_.at_marker_after_partial() && reader_.marker_code() == expected) {
            note_pad(reader_.pending_pad_bits(), reader_.pad_value());
            reader_.skip_marker();
            reader_.fill();
            ++rst_count;
            prev_dc_.fill(0);
          } else {
            markers_active = false;
          }
        }
        for (size_t c = 0; c < ncomp; ++c) {
          const ScanComponent& sc = h_.components[c];
          CoefficientPlane& plane = res.planes[c];
          for (int by = 0; by < sc.mcu_v; ++by) {
            for (int bx = 0; bx < sc.mcu_h; ++bx) {
              decode_block(plane.block(mx * sc.mcu_h + bx, my * sc.mcu_v + by), c, res.bits);
            }
          }
        }
      }
    }

    // End of scan: whatever is left in the current byte is padding.
    RowMark end = reader_.mark();
    if (end.handover.bit_offset != 0) {
      const int r = reader_.pending_pad_bits();
      if (reader_.pad_bits_real()) note_pad(r, reader_.pad_value());
    }
    res.pad_bit = pad_ones_ ? 1 : (pad_zeros_ ? 0 : 1);
    res.pad_consistent = !(pad_ones_ && pad_zeros_);
    if (end.handover.bit_offset != 0) {
      const uint8_t mask = static_cast<uint8_t>(0xFF >> end.handover.bit_offset);
      const uint8_t last = static_cast<uint8_t>(end.handover.partial_byte | (res.pad_bit ? mask : 0));
      res.scan_end = end.byte_offset + 1 + (last == 0xFF ? 1 : 0);
    } else {
      res.scan_end = end.byte_offset;
    }
    if (reader_.overrun()) {
      if (!reader_.stopped_at_eof()) {
        fail(ErrorCode::kTruncatedScan, "scan interrupted by a marker");
      }
      res.truncated = true;
    }
    res.rst_count = rst_count;
    return res;
  }

 private:
  void note_pad(int count, uint32_t value) {
    if (count == 0) return;
    if (value == (1u << count) - 1) {
      pad_ones_ = true;
    } else if (value == 0) {
      pad_zeros_ = true;
    } else {
      pad_ones_ = pad_zeros_ = true;
    }
  }

  int decode_symbol(const HuffmanDecoder& d, int* length) {
    int len = 0;
    const int sym = d.decode(reader_.peek16(), &len);
    if (sym < 0) fail(ErrorCode::kUnsupportedJpeg, "invalid Huffman code in scan");
    reader_.consume(len);
    *length = len;
    return sym;
  }

  void decode_block(QuantizedBlock& block, size_t c, ScanBitStats& bits) {
    const ScanComponent& sc = h_.components[c];
    reader_.fill();
    int len = 0;
    const int s = decode_symbol(*dc_[sc.dc_table], &len);
    if (s > 11) fail(ErrorCode::kAcValuesOutOfRange, "DC difference category above 11");
    const int diff = s ? extend(reader_.get_bits(s), s) : 0;
    const int dc = prev_dc_[c] + diff;
    if (dc <= -2048 || dc >= 2048) fail(ErrorCode::kAcValuesOutOfRange, "DC value out of range");
    bits.dc_bits += len + s;
    prev_dc_[c] = static_cast<int16_t>(dc);
    block.coeffs[0] = static_cast<int16_t>(dc);

    const HuffmanDecoder& ac = *ac_[sc.ac_table];
    for (int k = 1; k < 64;) {
      reader_.fill();
      const int rs = decode_symbol(ac, &len);
      const int r = rs >> 4;
      const int size = rs & 15;
      if (size == 0) {
        if (r == 15) {
          if (k + 16 > 64) fail(ErrorCode::kUnsupportedJpeg, "zero run past end of block");
          charge(bits, std::min(k + 15, 63), len);
          k += 16;
          continue;
        }
        if (r != 0) fail(ErrorCode::kUnsupportedJpeg, "invalid AC run/size symbol");
        charge(bits, k, len);
        break;  // EOB
      }
      k += r;
      if (k > 63) fail(ErrorCode::kUnsupportedJpeg, "AC run past end of block");
      if (size > 11) fail(ErrorCode::kAcValuesOutOfRange, "AC value out of range");
      const int v = extend(reader_.get_bits(size), size);
      block.coeffs[kZigzagToNatural[k]] = static_cast<int16_t>(v);
      charge(bits, k, len + size);
      ++k;
    }
  }

  static void charge(ScanBitStats& bits, int zigzag_pos, int count) {
    if (coeff_class(kZigzagToNatural[zigzag_pos]) == CoeffClass::kInterior) {
      bits.interior_bits += count;
    } else {
      bits.edge_bits += count;
    }
  }

  const JpegHeader& h_;
  ScanBitReader reader_;
  std::array<std::optional<HuffmanDecoder>, 4> dc_;
  std::array<std::optional<HuffmanDecoder>, 4> ac_;
  std::array<int16_t, kMaxChannels> prev_dc_{};
  bool pad_ones_ = false;
  bool pad_zeros_ = false;
};

}  // namespace

ScanDecodeResult decode_scan(const JpegHeader& header, ByteSpan bytes) {
  return ScanDecoder(header, bytes).run();
}

Bytes ParsedJpeg::trailer() const {
  Bytes out = scan_trailer;
  if (has_eoi) {
    out.push_back(0xFF);
    out.push_back(0xD9);
  }
  out.insert(out.end(), append_garbage.begin(), append_garbage.end());
  return out;
}

ParsedJpeg parse_jpeg(ByteSpan bytes) {
  ParsedJpeg p;
  p.header = parse_header(bytes);
  p.header_bytes.assign(bytes.begin(), bytes.begin() + p.header.header_size);
  ScanDecodeResult scan = decode_scan(p.header, bytes);
  p.channels = std::move(scan.planes);
  p.rows = std::move(scan.rows);
  p.scan_end = scan.scan_end;
  p.rst_count = scan.rst_count;
  p.pad_bit = scan.pad_bit;
  p.pad_consistent = scan.pad_consistent;
  p.truncated = scan.truncated;
  p.bits = scan.bits;
  p.file_size = bytes.size();
  if (!p.truncated && p.scan_end <= bytes.size()) {
    const size_t start = p.scan_end;
    size_t eoi = start;
    while (eoi + 1 < bytes.size() && !(bytes[eoi] == 0xFF && bytes[eoi + 1] == 0xD9)) ++eoi;
    if (eoi + 1 < bytes.size()) {
      p.scan_trailer.assign(bytes.begin() + start, bytes.begin() + eoi);
      p.has_eoi = true;
      p.append_garbage.assign(bytes.begin() + eoi + 2, bytes.end());
    } else {
      p.scan_trailer.assign(bytes.begin() + start, bytes.end());
    }
  } else {
    p.truncated = true;
  }
  return p;
}

}  // namespace lepton
