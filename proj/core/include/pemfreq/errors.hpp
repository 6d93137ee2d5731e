#pragma once

#include <stdexcept>
#include <string>

namespace pemfreq {

/// Invalid configuration: bad scenario values, dimension mismatches,
/// non-physical parameters.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// The integrator produced a non-finite state.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A device reached a non-finite thermal state.
class DeviceFault : public std::runtime_error {
 public:
  explicit DeviceFault(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pemfreq
