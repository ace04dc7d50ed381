#pragma once

#include <stdexcept>
#include <string>

namespace zsl {

// Bad input, precondition violation, malformed file. The CLI maps these
// to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / stream failure. The CLI maps these to exit code 1.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zsl
