#include "lepton/error.h"

namespace lepton {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kProgressive: return "Progressive";
    case ErrorCode::kUnsupportedJpeg: return "UnsupportedJpeg";
    case ErrorCode::kNotAnImage: return "NotAnImage";
    case ErrorCode::kFourColorCmyk: return "FourColorCmyk";
    case ErrorCode::kChromaSubsampleBig: return "ChromaSubsampleBig";
    case ErrorCode::kAcValuesOutOfRange: return "AcValuesOutOfRange";
    case ErrorCode::kTruncatedScan: return "TruncatedScan";
    case ErrorCode::kUnexpectedEndOfStream: return "UnexpectedEndOfStream";
    case ErrorCode::kCorruptStream: return "CorruptStream";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kUnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kTruncatedContainer: return "TruncatedContainer";
    case ErrorCode::kBadSegmentId: return "BadSegmentId";
    case ErrorCode::kSizeOverflow: return "SizeOverflow";
    case ErrorCode::kMemLimitDecode: return "MemLimitDecode";
    case ErrorCode::kMemLimitEncode: return "MemLimitEncode";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace lepton
