#pragma once

#include <stdexcept>
#include <string>

namespace wnls {

/// Bad input: shape mismatch, out-of-domain parameter, malformed config.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trajectory produced NaN/inf or exceeded the blow-up guard.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, double t, double max_abs)
      : std::runtime_error(what), time_(t), max_abs_(max_abs) {}
  double time() const { return time_; }
  double max_abs() const { return max_abs_; }

 private:
  double time_;
  double max_abs_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void warn(const std::string& msg);

}  // namespace wnls
