#include <bit>

#include "lepton/error.h"
#include "lepton/jpeg_codec.h"

namespace lepton {
namespace {

int magnitude_bits(int v) {
  return v == 0 ? 0 : std::bit_width(static_cast<unsigned>(v < 0 ? -v : v));
}

}  // namespace

HuffmanScanWriter::HuffmanScanWriter(const JpegHeader& header, ScanEncodeParams params,
                                     const HuffmanHandover& start, int start_mcu_row)
    : header_(header), params_(params), prev_dc_(start.prev_dc), mcu_row_(start_mcu_row) {
  auto build = [](const HuffmanTable& t, Codebook& book) {
    if (!t.defined) return;
    uint32_t code = 0;
    size_t k = 0;
    for (int len = 1; len <= 16; ++len) {
      for (int i = 0; i < t.counts[len - 1]; ++i, ++k, ++code) {
        book.codes[t.symbols[k]] = {static_cast<uint16_t>(code), static_cast<uint8_t>(len)};
      }
      code <<= 1;
    }
  };
  for (int i = 0; i < 4; ++i) {
    build(header.dc_tables[i], dc_books_[i]);
    build(header.ac_tables[i], ac_books_[i]);
  }
  nbits_ = start.bit_offset;
  acc_ = start.bit_offset ? (start.partial_byte >> (8 - start.bit_offset)) : 0;
}

void HuffmanScanWriter::put_bits(uint32_t bits, int length) {
  acc_ = (acc_ << length) | (bits & ((1u << length) - 1));
  nbits_ += length;
  flush_bytes();
}

void HuffmanScanWriter::flush_bytes() {
  while (nbits_ >= 8) {
    nbits_ -= 8;
    const uint8_t b = static_cast<uint8_t>(acc_ >> nbits_);
    out_.push_back(b);
    if (b == 0xFF) out_.push_back(0x00);
  }
  acc_ &= (uint64_t{1} << nbits_) - 1;
}

void HuffmanScanWriter::pad_to_byte() {
  if (nbits_ == 0) return;
  const int n = 8 - nbits_;
  put_bits(params_.pad_bit ? (1u << n) - 1 : 0, n);
}

void HuffmanScanWriter::restart_marker(uint32_t index) {
  pad_to_byte();
  out_.push_back(0xFF);
  out_.push_back(static_cast<uint8_t>(0xD0 + (index & 7)));
  prev_dc_.fill(0);
}

void HuffmanScanWriter::encode_block(const QuantizedBlock& block, int channel) {
  const ScanComponent& sc = header_.components[channel];
  const Codebook& dc = dc_books_[sc.dc_table];
  const Codebook& ac = ac_books_[sc.ac_table];
  auto emit = [this](const Code& c) {
    if (c.length == 0) fail(ErrorCode::kCorruptStream, "symbol missing from Huffman table");
    put_bits(c.bits, c.length);
  };
  auto extra = [this](int v, int s) {
    if (s > 0) put_bits(static_cast<uint32_t>(v < 0 ? v + (1 << s) - 1 : v), s);
  };

  const int diff = block.coeffs[0] - prev_dc_[channel];
  prev_dc_[channel] = block.coeffs[0];
  const int ds = magnitude_bits(diff);
  if (ds > 15) fail(ErrorCode::kCorruptStream, "DC difference too large");
  emit(dc.codes[ds]);
  extra(diff, ds);

  int run = 0;
  for (int k = 1; k < 64; ++k) {
    const int v = block.coeffs[kZigzagToNatural[k]];
    if (v == 0) {
      ++run;
      continue;
    }
    while (run >= 16) {
      emit(ac.codes[0xF0]);
      run -= 16;
    }
    const int s = magnitude_bits(v);
    if (s > 15) fail(ErrorCode::kCorruptStream, "AC value too large");
    emit(ac.codes[(run << 4) | s]);
    extra(v, s);
    run = 0;
  }
  if (run > 0) emit(ac.codes[0x00]);
}

void HuffmanScanWriter::write_mcu_row(const McuRowView& row) {
  const int ri = header_.restart_interval;
  for (int mx = 0; mx < header_.mcu_cols; ++mx) {
    const uint64_t mcu = static_cast<uint64_t>(mcu_row_) * header_.mcu_cols + mx;
    if (ri > 0 && mcu > 0 && mcu % ri == 0) {
      const uint64_t k = mcu / ri;
      if (k <= params_.rst_count) restart_marker(static_cast<uint32_t>(k - 1));
    }
    for (size_t c = 0; c < header_.components.size(); ++c) {
      const ScanComponent& sc = header_.components[c];
      for (int by = 0; by < sc.mcu_v; ++by) {
        const QuantizedBlock* base = row.rows[c][by];
        for (int bx = 0; bx < sc.mcu_h; ++bx) {
          encode_block(base[mx * sc.mcu_h + bx], static_cast<int>(c));
        }
      }
    }
  }
  ++mcu_row_;
}

void HuffmanScanWriter::finish() { pad_to_byte(); }

HuffmanHandover HuffmanScanWriter::handover() const {
  HuffmanHandover h;
  h.bit_offset = static_cast<uint8_t>(nbits_);
  h.partial_byte = nbits_ ? static_cast<uint8_t>(acc_ << (8 - nbits_)) : 0;
  h.prev_dc = prev_dc_;
  return h;
}

Bytes encode_scan(const JpegHeader& header, const std::vector<CoefficientPlane>& planes,
                  ScanEncodeParams params, const HuffmanHandover& handover, int first_row,
                  int end_row) {
  HuffmanScanWriter w(header, params, handover, first_row);
  for (int r = first_row; r < end_row; ++r) {
    McuRowView view;
    for (size_t c = 0; c < planes.size(); ++c) {
      const int v = header.components[c].mcu_v;
      for (int k = 0; k < v; ++k) view.rows[c][k] = &planes[c].block(0, r * v + k);
    }
    w.write_mcu_row(view);
  }
  if (end_row == header.mcu_rows) w.finish();
  return std::move(w.output());
}

}  // namespace lepton
