#pragma once

#include <stdexcept>
#include <string>

namespace qtune {

enum class ErrorKind {
  Config,    // invalid configuration or action space
  Parse,     // malformed file contents
  Range,     // index or value out of bounds
  Io,        // filesystem failures
  Dataset,   // invalid samples or missing files
  Pipeline,  // a processing stage failed
  Numeric,   // non-finite arithmetic
  Contract,  // caller broke a precondition (dimension mismatch etc.)
  Busy,      // output directory locked by another invocation
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type carried across the library; `kind()` drives the
/// mapping to C status codes and CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace qtune
