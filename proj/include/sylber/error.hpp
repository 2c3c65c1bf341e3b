#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sylber {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  // container formats
  MalformedHeader,
  TruncatedData,
  NonFiniteValue,
  ParseError,
  UnsortedEntries,
  OverlappingEntries,
  InvalidSpan,
  // segmentation
  ZeroNormFrame,
  NoRootInRange,
  EmptyBatch,
  // distillation
  ShapeMismatch,
  LengthMismatch,
  // quantization
  TooFewPoints,
  MissingEmbedding,
  MissingToken,
  DimMismatch,
  TokenOutOfRange,
  // bitstream
  BadMagic,
  FrameCountMismatch,
  // discriminability
  DegenerateCurve,
  AllFramesGated,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsortedEntries: return "UnsortedEntries";
    case ErrorCode::OverlappingEntries: return "OverlappingEntries";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::ZeroNormFrame: return "ZeroNormFrame";
    case ErrorCode::NoRootInRange: return "NoRootInRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::MissingToken: return "MissingToken";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::TokenOutOfRange: return "TokenOutOfRange";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::DegenerateCurve: return "DegenerateCurve";
    case ErrorCode::AllFramesGated: return "AllFramesGated";
  }
  return "Unknown";
}

/// Exception type thrown by every sylber component. The code identifies the
/// violated condition; the message carries context (file, index, value).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace sylber
