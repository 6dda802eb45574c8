#pragma once

#include <stdexcept>
#include <string>

namespace fer {

enum class ErrorCode {
  invalid_argument,
  io,
  format,
  bounds,
  shape,
  train,
  internal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fer
