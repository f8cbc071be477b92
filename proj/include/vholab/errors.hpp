#pragma once

#include <stdexcept>
#include <string>

namespace vholab {

/// Bad user-supplied configuration (unknown key, out-of-range value, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated an API precondition (stepping a finished episode,
/// mismatched shapes, probabilities outside [0, 1], ...).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Persisted data is unusable: truncated / corrupted / wrong format version.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during training (non-finite gradient or loss).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

inline void require_config(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace vholab
