#include "slimbench/error.hpp"

namespace slimbench {

void fail_validation(const std::string& message) { throw ValidationError(message); }

void fail_io(const std::string& message) { throw IoError(message); }

}  // namespace slimbench
