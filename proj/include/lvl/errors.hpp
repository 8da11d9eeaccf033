#pragma once

#include <stdexcept>
#include <string>

namespace lvl {

// Failures caused by user input (bad config, malformed files). Exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, const std::string& what);
  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant (non-finite loss, NaN tensor, ...). Exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lvl
