#pragma once

#include <stdexcept>
#include <string>

namespace mixdown {

// Broad failure classes; each maps to one CLI exit code.
enum class ErrorKind {
  config,    // bad recipe, bad flags, missing stage inputs
  provider,  // scorer/embedder unreachable or speaking the wrong protocol
  io,        // files that cannot be read or written
  data,      // precondition violations on values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // Stable machine-readable code, e.g. "empty_sequence" or "scorer_unavailable".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace mixdown
