#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmner {

enum class ErrorCode {
  MalformedLine,
  EmptyCorpus,
  UnmappedClass,
  OverlappingSpans,
  SpanOutOfRange,
  InvalidScheme,
  LengthMismatch,
  NonFiniteObjective,
  PositionOutOfRange,
  EmptyVocabulary,
  DegenerateClass,
  ImageTooSmall,
  InvalidImage,
  TooFewDescriptors,
  CorruptIndex,
  StoreUnreadable,
  IoFailure,
  InvariantViolation,
  ShapeMismatch,
  TooFewSentences,
  ConfigInvalid,
  InvalidModel,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnmappedClass: return "UnmappedClass";
    case ErrorCode::OverlappingSpans: return "OverlappingSpans";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::InvalidScheme: return "InvalidScheme";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::TooFewDescriptors: return "TooFewDescriptors";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::StoreUnreadable: return "StoreUnreadable";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewSentences: return "TooFewSentences";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidModel: return "InvalidModel";
  }
  return "Unknown";
}

// Every failure in the library surfaces as this exception; `code()` names
// the condition and `what()` carries the detail (line number, class, path).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmner
