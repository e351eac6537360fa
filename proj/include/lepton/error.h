#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lepton {

enum class ErrorCode {
  // Input classification.
  kProgressive,
  kUnsupportedJpeg,
  kNotAnImage,
  kFourColorCmyk,
  kChromaSubsampleBig,
  kAcValuesOutOfRange,
  kTruncatedScan,
  // Arithmetic-coded streams.
  kUnexpectedEndOfStream,
  kCorruptStream,
  // Container.
  kBadMagic,
  kUnsupportedVersion,
  kUnsupportedFeature,
  kCorruptHeader,
  kTruncatedContainer,
  kBadSegmentId,
  kSizeOverflow,
  // Resource limits.
  kMemLimitDecode,
  kMemLimitEncode,
  kTimeout,
  kIo,
  // Violated internal contract (a bug, not bad input).
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace lepton
