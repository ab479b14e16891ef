#pragma once

#include <stdexcept>
#include <string>

namespace abcmi {

/// Failure category. The CLI maps each kind to a distinct exit status.
enum class ErrorKind {
  validation,  // malformed input, violated precondition
  infeasible,  // valid input, but the request cannot be satisfied (n' > n'')
  io,          // file could not be opened, read or written
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw Error(ErrorKind::validation, what);
}

[[noreturn]] inline void fail_infeasible(const std::string& what) {
  throw Error(ErrorKind::infeasible, what);
}

[[noreturn]] inline void fail_io(const std::string& what) {
  throw Error(ErrorKind::io, what);
}

}  // namespace abcmi
