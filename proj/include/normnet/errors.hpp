#pragma once

#include <stdexcept>
#include <string>

namespace normnet {

// Bad command-line usage or option combinations. CLI exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Missing/corrupt files, shape mismatches, bad inputs. CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace normnet
