#include "mixdown/error.hpp"

namespace mixdown {

Error::Error(ErrorKind kind, std::string code, const std::string& message)
    : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::data:
      return 2;
    case ErrorKind::provider:
      return 3;
    case ErrorKind::io:
      return 4;
  }
  return 1;
}

}  // namespace mixdown
