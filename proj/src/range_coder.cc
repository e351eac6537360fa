#include "lepton/range_coder.h"

namespace lepton {
namespace {

constexpr uint32_t kTop = 1u << 24;

struct ProbabilityTable {
  std::array<std::array<uint16_t, 256>, 256> p{};
  ProbabilityTable() {
    for (uint32_t z = 0; z < 256; ++z) {
      for (uint32_t o = 0; o < 256; ++o) {
        uint32_t v = ((z + 1) << 16) / (z + o + 2);
        if (v < 1) v = 1;
        if (v > 65535) v = 65535;
        p[z][o] = static_cast<uint16_t>(v);
      }
    }
  }
};

const ProbabilityTable kProbabilities;

}  // namespace

uint16_t StatisticBin::p0() const { return kProbabilities.p[zeros_][ones_]; }

void StatisticBin::update(int bit) {
  uint8_t& c = bit ? ones_ : zeros_;
  ++c;
  if (c == 255) {
    zeros_ >>= 1;
    ones_ >>= 1;
  }
}

void RangeEncoder::shift_low() {
  if (low_ < 0xFF000000u || low_ >= (uint64_t{1} << 32)) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::put_bit(StatisticBin& bin, int bit) {
  if (flushed_) fail(ErrorCode::kInternal, "put_bit after flush");
  const uint32_t bound = static_cast<uint32_t>((uint64_t{range_} * bin.p0()) >> 16);
  if (bit) {
    low_ += bound;
    range_ -= bound;
  } else {
    range_ = bound;
  }
  bin.update(bit);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::flush() {
  if (flushed_) fail(ErrorCode::kInternal, "range encoder flushed twice");
  for (int i = 0; i < 5; ++i) shift_low();
  flushed_ = true;
}

RangeDecoder::RangeDecoder(ByteSource& source) : source_(source) {
  // The first byte is always the encoder's initial zero cache byte.
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  uint8_t b = 0;
  if (!source_.next(b)) fail(ErrorCode::kUnexpectedEndOfStream, "arithmetic-coded stream exhausted");
  return b;
}

int RangeDecoder::get_bit(StatisticBin& bin) {
  const uint32_t bound = static_cast<uint32_t>((uint64_t{range_} * bin.p0()) >> 16);
  int bit;
  if (code_ < bound) {
    range_ = bound;
    bit = 0;
  } else {
    code_ -= bound;
    range_ -= bound;
    bit = 1;
  }
  bin.update(bit);
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return bit;
}

}  // namespace lepton
