#pragma once

#include <stdexcept>
#include <string>

namespace leofl {

/// Malformed scenario files or inconsistent option combinations.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed data files (IDX parsing and friends).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A ground-station exchange that violates the protocol contract.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training produced non-finite model parameters.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace leofl
