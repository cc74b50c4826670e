#include "scmc/model.hpp"

#include <cmath>
#include <string>

namespace scmc {

GaussianSubposterior::GaussianSubposterior(Vector mean, Matrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Eigen::Index d = mean_.size();
  if (d == 0 || cov_.rows() != d || cov_.cols() != d) {
    throw ConfigError("subposterior covariance must be " + std::to_string(d) +
                      "x" + std::to_string(d));
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw ConfigError("subposterior parameters must be finite");
  }
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("subposterior covariance is not symmetric");
  }
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("subposterior covariance is not positive definite");
  }
  chol_lower_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(d, d));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

std::vector<GaussianSubposterior> make_toeplitz_subposteriors(int workers,
                                                              int dim) {
  if (workers < 1) throw ConfigError("worker count K must be >= 1");
  if (dim < 1) throw ConfigError("dimension d must be >= 1");

  std::vector<GaussianSubposterior> subs;
  subs.reserve(static_cast<std::size_t>(workers));
  for (int s = 0; s < workers; ++s) {
    const double rho = static_cast<double>(s) / workers;
    Vector column(dim);
    double power = 1.0;
    for (int i = 0; i < dim; ++i) {
      column[i] = power;
      power *= rho;
    }
    Matrix cov(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) cov(i, j) = column[std::abs(i - j)];
    subs.emplace_back(Vector::Zero(dim), std::move(cov));
  }
  return subs;
}

GlobalPosterior global_posterior(std::span<const GaussianSubposterior> subs) {
  if (subs.empty()) throw ConfigError("global posterior needs >= 1 shard");
  const Eigen::Index d = subs.front().dim();
  Matrix precision = Matrix::Zero(d, d);
  Vector shift = Vector::Zero(d);
  for (const auto& sub : subs) {
    if (sub.dim() != d) throw ConfigError("subposterior dimensions differ");
    precision += sub.precision();
    shift += sub.precision() * sub.mean();
  }
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("precision sum is not positive definite");
  }
  GlobalPosterior g;
  g.precision = precision;
  g.cov = llt.solve(Matrix::Identity(d, d));
  g.cov = 0.5 * (g.cov + g.cov.transpose()).eval();
  g.mean = llt.solve(shift);
  return g;
}

TestFunctionTable second_moment_table(const GlobalPosterior& posterior) {
  return {posterior.cov + posterior.mean * posterior.mean.transpose()};
}

ParamVector sample_subposterior(const GaussianSubposterior& sub,
                                Stream& stream) {
  std::normal_distribution<double> normal;
  Vector z(sub.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(stream);
  return sub.mean() + sub.chol_lower() * z;
}

double relative_error(const Matrix& empirical_second_moment,
                      const TestFunctionTable& table) {
  const Matrix& truth = table.expectations;
  double total = 0.0;
  long retained = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      const double expected = std::abs(truth(i, j));
      if (expected < kErrorDenominatorFloor) continue;
      total += std::abs(empirical_second_moment(i, j) - truth(i, j)) / expected;
      ++retained;
    }
  }
  if (retained == 0) {
    throw NumericalError("every test-function expectation is below 1e-9");
  }
  return total / static_cast<double>(retained);
}

double error_at(std::span<const ParamVector> samples,
                const TestFunctionTable& table) {
  if (samples.empty()) throw ConfigError("error_at needs >= 1 sample");
  const Eigen::Index d = table.expectations.rows();
  Matrix moment = Matrix::Zero(d, d);
  for (const auto& theta : samples) moment += theta * theta.transpose();
  moment /= static_cast<double>(samples.size());
  return relative_error(moment, table);
}

}  // namespace scmc
