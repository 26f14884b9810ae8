#pragma once

#include <stdexcept>
#include <string>

namespace slimbench {

// Bad input, bad config, or a violated precondition. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system, network, or remote-service failure. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail_validation(const std::string& message);
[[noreturn]] void fail_io(const std::string& message);

}  // namespace slimbench
