#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace residual_forge {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  ImageTooSmall,
  IoError,
  ShapeMismatch,
  InvalidBounds,
  PatchTooSmall,
  DegenerateAlpha,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace residual_forge
