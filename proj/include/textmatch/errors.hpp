#pragma once

#include <stdexcept>
#include <string>

namespace textmatch {

// Problems with user-supplied files or configuration (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace textmatch
