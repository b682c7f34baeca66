#include "umprobe/error.hpp"

namespace umprobe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::invalid_parameter:
    return "invalid-parameter";
  case ErrorKind::invalid_input:
    return "invalid-input";
  case ErrorKind::numerical:
    return "numerical-error";
  case ErrorKind::io:
    return "io-error";
  case ErrorKind::format:
    return "format-error";
  case ErrorKind::pairing:
    return "pairing-error";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string &message) {
  throw Error(kind, message);
}

} // namespace umprobe
