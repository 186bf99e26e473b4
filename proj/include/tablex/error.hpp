#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tablex {

enum class ErrorCode {
  UnreadableInput,
  BadBlockIndex,
  OutOfBounds,
  MissingClass,
  EmptyCorpus,
  AdapterUnavailable,
  ProtocolViolation,
  EmptyPrediction,
  EmptyGold,
  Io,
  CorpusSchema,
  Config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableInput: return "UnreadableInput";
    case ErrorCode::BadBlockIndex: return "BadBlockIndex";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::AdapterUnavailable: return "AdapterUnavailable";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::EmptyPrediction: return "EmptyPrediction";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::Io: return "Io";
    case ErrorCode::CorpusSchema: return "CorpusSchema";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tablex
