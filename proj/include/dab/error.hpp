#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A message that would cross an entity-to-entity link.
class TopologyError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const char* what) {
  if (!cond) throw Error(what);
}

}  // namespace detail
}  // namespace dab
