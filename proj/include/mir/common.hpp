#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mir {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input (bad dimensions, non-finite values, parse failures).
class InputError : public Error {
 public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// Numerically singular system matrix; carries the offending period (0-based).
class SingularError : public Error {
 public:
  SingularError(const std::string& msg, int period) : Error(msg), period_(period) {}
  int period() const { return period_; }

 private:
  int period_;
};

// Degenerate data (e.g. Y identically zero) for which the likelihood is undefined.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& msg) : Error(msg) {}
};

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Stack of per-period vectors (t = 0..T-1).
using VectorStack = std::vector<VectorXd>;
// Stack of per-period matrices.
using MatrixStack = std::vector<MatrixXd>;

}  // namespace mir
