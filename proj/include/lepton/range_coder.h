#pragma once

// Adaptive binary range coder. 32-bit range, carry propagation through a
// cached byte (LZMA style), 16-bit probabilities from per-context counters.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lepton/error.h"

namespace lepton {

class StatisticBin {
 public:
  uint8_t zeros() const { return zeros_; }
  uint8_t ones() const { return ones_; }

  // Probability of a zero, scaled to 16 bits and kept inside [1, 65535].
  uint16_t p0() const;
  void update(int bit);

  friend bool operator==(const StatisticBin&, const StatisticBin&) = default;

 private:
  uint8_t zeros_ = 0;
  uint8_t ones_ = 0;
};

// Strongly typed offset into a BinGrid. Only the model layout creates these.
struct BinIndex {
  uint32_t value = 0;
  friend bool operator==(BinIndex, BinIndex) = default;
};

class BinGrid {
 public:
  explicit BinGrid(size_t size) : bins_(size) {}

  StatisticBin& at(BinIndex i) {
    if (i.value >= bins_.size()) fail(ErrorCode::kInternal, "bin index out of range");
    return bins_[i.value];
  }
  const StatisticBin& at(BinIndex i) const {
    if (i.value >= bins_.size()) fail(ErrorCode::kInternal, "bin index out of range");
    return bins_[i.value];
  }
  size_t size() const { return bins_.size(); }
  size_t bytes() const { return bins_.size() * sizeof(StatisticBin); }

  friend bool operator==(const BinGrid&, const BinGrid&) = default;

 private:
  std::vector<StatisticBin> bins_;
};

class RangeEncoder {
 public:
  void put_bit(StatisticBin& bin, int bit);
  // Emits the remaining register state. Calling it twice is an error.
  void flush();

  std::vector<uint8_t>& output() { return out_; }
  const std::vector<uint8_t>& output() const { return out_; }
  bool flushed() const { return flushed_; }

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool flushed_ = false;
  std::vector<uint8_t> out_;
};

// Byte supplier for the decoder. Returns false once no byte will ever come.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual bool next(uint8_t& byte) = 0;
};

class SpanByteSource : public ByteSource {
 public:
  explicit SpanByteSource(std::span<const uint8_t> data) : data_(data) {}
  bool next(uint8_t& byte) override {
    if (pos_ >= data_.size()) return false;
    byte = data_[pos_++];
    return true;
  }
  size_t consumed() const { return pos_; }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(ByteSource& source);

  int get_bit(StatisticBin& bin);

 private:
  uint8_t next_byte();

  ByteSource& source_;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

}  // namespace lepton
