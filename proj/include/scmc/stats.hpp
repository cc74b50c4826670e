#ifndef SCMC_STATS_HPP
#define SCMC_STATS_HPP

#include "scmc/types.hpp"

namespace scmc {

/// Streaming first and second raw moments of a sample sequence.
///
/// Holds the count, the sum of samples and the sum of outer products, so the
/// population covariance (1/L normalization) is available at any time over
/// the full history. Used for per-worker, per-shard and per-group estimates.
class RunningMoments {
 public:
  RunningMoments() = default;
  explicit RunningMoments(Eigen::Index dim);

  void update(const ParamVector& theta);

  Eigen::Index dim() const { return sum_.size(); }
  long count() const { return count_; }
  const Vector& sum() const { return sum_; }
  const Matrix& sum_outer() const { return sum_outer_; }

  /// sum / count. Throws NumericalError when empty.
  Vector mean() const;

  /// (1/L) sum (theta - mean)(theta - mean)^T, symmetrized.
  Matrix covariance() const;

  /// sigma2 * I + covariance(). Throws NumericalError when empty.
  Matrix regularized_cov(double sigma2) const;

 private:
  long count_ = 0;
  Vector sum_;
  Matrix sum_outer_;
};

/// Moments of decoded precision-weighted sums phi^l. The empirical covariance
/// of these tends to the global precision as the sample count grows.
class DecodedMoments {
 public:
  DecodedMoments() = default;
  explicit DecodedMoments(Eigen::Index dim) : acc_(dim) {}

  void update(const Vector& phi) { acc_.update(phi); }
  long count() const { return acc_.count(); }
  const Vector& sum() const { return acc_.sum(); }
  const Matrix& sum_outer() const { return acc_.sum_outer(); }

  /// Population covariance of the absorbed phi vectors.
  Matrix d_hat() const { return acc_.covariance(); }

 private:
  RunningMoments acc_;
};

/// Functional form of RunningMoments::update.
inline RunningMoments moments_update(RunningMoments m,
                                     const ParamVector& theta) {
  m.update(theta);
  return m;
}

inline Matrix regularized_cov(const RunningMoments& m, double sigma2) {
  return m.regularized_cov(sigma2);
}

inline Matrix d_hat(const DecodedMoments& dm) { return dm.d_hat(); }

/// Condition estimates above this are treated as singular.
inline constexpr double kMaxCondition = 1e12;

/// Solves (sigma2 I + d_hat) theta = phi with a Cholesky factorization.
/// Throws NumericalError if the system is not positive definite or its
/// reciprocal condition estimate is below 1 / kMaxCondition.
ParamVector ccmc_recover(const Vector& phi, const Matrix& d_hat,
                         double sigma2);

/// Cholesky factorization of an SPD matrix that must succeed.
Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what);

}  // namespace scmc

#endif  // SCMC_STATS_HPP
