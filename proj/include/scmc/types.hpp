#ifndef SCMC_TYPES_HPP
#define SCMC_TYPES_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace scmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A d-dimensional model-parameter sample.
using ParamVector = Vector;

/// Random stream used everywhere in the simulator. Each stream is owned by a
/// single worker, shard or run; none are shared across threads.
using Stream = std::mt19937_64;

/// Invalid configuration or precondition violation reported to the user.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve or factorization could not be carried out reliably.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A decode vector does not reproduce the all-ones row.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ||a - b||_F / ||b||_F, or ||a||_F when b is zero.
inline double frobenius_relative(const Matrix& a, const Matrix& b) {
  const double denom = b.norm();
  const double diff = (a - b).norm();
  return denom > 0.0 ? diff / denom : diff;
}

}  // namespace scmc

#endif  // SCMC_TYPES_HPP
