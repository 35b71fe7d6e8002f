#pragma once
// Error type shared across the library. The C layer maps ErrorKind onto the
// public status codes one-to-one.

#include <stdexcept>
#include <string>

namespace summax {

enum class ErrorKind {
  invalid_argument,
  limit_exceeded,
  io,
  parse,
  state,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace summax
