#include "scmc/stats.hpp"

#include <string>

namespace scmc {

RunningMoments::RunningMoments(Eigen::Index dim)
    : sum_(Vector::Zero(dim)), sum_outer_(Matrix::Zero(dim, dim)) {}

void RunningMoments::update(const ParamVector& theta) {
  if (sum_.size() == 0) {
    sum_ = Vector::Zero(theta.size());
    sum_outer_ = Matrix::Zero(theta.size(), theta.size());
  }
  if (theta.size() != sum_.size()) {
    throw ConfigError("sample dimension does not match accumulator");
  }
  ++count_;
  sum_ += theta;
  sum_outer_.noalias() += theta * theta.transpose();
}

Vector RunningMoments::mean() const {
  if (count_ == 0) throw NumericalError("mean of an empty accumulator");
  return sum_ / static_cast<double>(count_);
}

Matrix RunningMoments::covariance() const {
  if (count_ == 0) throw NumericalError("covariance of an empty accumulator");
  const Vector mu = mean();
  Matrix cov = sum_outer_ / static_cast<double>(count_) - mu * mu.transpose();
  return 0.5 * (cov + cov.transpose());
}

Matrix RunningMoments::regularized_cov(double sigma2) const {
  Matrix cov = covariance();
  cov.diagonal().array() += sigma2;
  return cov;
}

Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
  return llt;
}

ParamVector ccmc_recover(const Vector& phi, const Matrix& d_hat,
                         double sigma2) {
  Matrix system = d_hat;
  system.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success || llt.rcond() < 1.0 / kMaxCondition) {
    throw NumericalError("sigma2 I + D_hat is numerically singular");
  }
  return llt.solve(phi);
}

}  // namespace scmc
