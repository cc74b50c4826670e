#ifndef SCMC_MODEL_HPP
#define SCMC_MODEL_HPP

#include <span>
#include <vector>

#include "scmc/types.hpp"

namespace scmc {

/// Gaussian subposterior N(mean, cov) for one data shard. The Cholesky
/// factor is computed once at construction and reused by the sampler.
class GaussianSubposterior {
 public:
  /// Throws ConfigError if cov is not square, not symmetric to 1e-12, or
  /// not positive definite.
  GaussianSubposterior(Vector mean, Matrix cov);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& chol_lower() const { return chol_lower_; }
  /// cov^{-1}
  const Matrix& precision() const { return precision_; }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_lower_;
  Matrix precision_;
};

/// Exact product of Gaussian subposteriors.
struct GlobalPosterior {
  Vector mean;
  Matrix cov;
  Matrix precision;
};

/// expectations(i, j) = E[theta_i theta_j] under the global posterior.
struct TestFunctionTable {
  Matrix expectations;
};

/// Entries with |E[f]| below this are dropped from the error average.
inline constexpr double kErrorDenominatorFloor = 1e-9;

/// K zero-mean subposteriors; shard s (0-based) has a symmetric Toeplitz
/// covariance with first column [1, rho, rho^2, ...], rho = s / K.
std::vector<GaussianSubposterior> make_toeplitz_subposteriors(int workers,
                                                              int dim);

GlobalPosterior global_posterior(std::span<const GaussianSubposterior> subs);

TestFunctionTable second_moment_table(const GlobalPosterior& posterior);

/// mean + L z with z standard normal, L the lower Cholesky factor.
ParamVector sample_subposterior(const GaussianSubposterior& sub,
                                Stream& stream);

/// Relative error of an empirical second-moment matrix against the table,
/// averaged over all d^2 ordered entries with |E| >= kErrorDenominatorFloor.
double relative_error(const Matrix& empirical_second_moment,
                      const TestFunctionTable& table);

/// Relative error of the sample average of theta theta^T.
double error_at(std::span<const ParamVector> samples,
                const TestFunctionTable& table);

}  // namespace scmc

#endif  // SCMC_MODEL_HPP
