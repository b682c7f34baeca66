#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace umprobe {

enum class ErrorKind {
  invalid_parameter,
  invalid_input,
  numerical,
  io,
  format,
  pairing,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string &message);

} // namespace umprobe
