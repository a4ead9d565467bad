#pragma once

#include <stdexcept>
#include <string>

namespace spatfuse {

// Error taxonomy mirrors the process exit codes: configuration problems,
// data ingestion problems, and numerical failures map to distinct codes at
// the C API boundary.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spatfuse
