#include "scmc/coding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "scmc/rng.hpp"

namespace scmc {
namespace {

constexpr double kBuildConditionLimit = 1e10;
constexpr int kBuildAttempts = 20;
constexpr int kExhaustiveCheckLimit = 12;
constexpr int kSpotChecks = 64;

void check_parameters(int workers, int redundancy) {
  if (workers < 1) throw ConfigError("worker count K must be >= 1");
  if (redundancy < 1 || redundancy > workers) {
    throw ConfigError("r must satisfy 1 <= r <= K (got r=" +
                      std::to_string(redundancy) +
                      ", K=" + std::to_string(workers) + ")");
  }
}

// Cyclic support with b_k(k) = 1 and the remaining r-1 entries chosen so
// that H b_k = 0. Returns false if a local system is singular.
bool fill_cyclic(Matrix& b, int redundancy, Stream& stream) {
  const int n = static_cast<int>(b.rows());
  const int stragglers = redundancy - 1;
  b.setZero();
  if (stragglers == 0) {
    b.setIdentity();
    return true;
  }
  std::normal_distribution<double> normal;
  Matrix h(stragglers, n);
  for (int i = 0; i < stragglers; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j + 1 < n; ++j) {
      h(i, j) = normal(stream);
      row_sum += h(i, j);
    }
    h(i, n - 1) = -row_sum;
  }
  for (int k = 0; k < n; ++k) {
    Matrix local(stragglers, stragglers);
    for (int j = 1; j < redundancy; ++j) local.col(j - 1) = h.col((k + j) % n);
    const Vector rhs = -h.col(k);
    Eigen::FullPivLU<Matrix> lu(local);
    if (!lu.isInvertible()) return false;
    const Vector x = lu.solve(rhs);
    b(k, k) = 1.0;
    for (int j = 1; j < redundancy; ++j) {
      if (x[j - 1] == 0.0) return false;
      b(k, (k + j) % n) = x[j - 1];
    }
  }
  return true;
}

void fill_fractional(Matrix& b, int redundancy) {
  const int n = static_cast<int>(b.rows());
  const int per_group = n / redundancy;
  b.setZero();
  for (int k = 0; k < n; ++k) {
    const int block = k % per_group;
    for (int j = 0; j < redundancy; ++j) b(k, block * redundancy + j) = 1.0;
  }
}

// Calls fn for every size-m subset of [0, n) in lexicographic order.
template <typename Fn>
void for_each_subset(int n, int m, Fn&& fn) {
  std::vector<int> subset(static_cast<std::size_t>(m));
  std::iota(subset.begin(), subset.end(), 0);
  while (true) {
    if (!fn(std::span<const int>(subset))) return;
    int i = m - 1;
    while (i >= 0 && subset[i] == n - m + i) --i;
    if (i < 0) return;
    ++subset[i];
    for (int j = i + 1; j < m; ++j) subset[j] = subset[j - 1] + 1;
  }
}

std::vector<int> random_subset(int n, int m, Stream& stream) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), stream);
  ids.resize(static_cast<std::size_t>(m));
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool well_conditioned(const CodeScheme& scheme, Stream& stream) {
  const int n = scheme.workers();
  const int m = scheme.decode_set_size();
  bool ok = true;
  auto check = [&](std::span<const int> subset) {
    ok = scheme.decode_condition(subset) <= kBuildConditionLimit;
    return ok;
  };
  if (n <= kExhaustiveCheckLimit) {
    for_each_subset(n, m, check);
  } else {
    for (int i = 0; i < kSpotChecks && ok; ++i) {
      const auto subset = random_subset(n, m, stream);
      check(subset);
    }
  }
  return ok;
}

Matrix decode_system(const Matrix& encoding, std::span<const int> rows) {
  Matrix system(encoding.cols(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    system.col(static_cast<Eigen::Index>(i)) = encoding.row(rows[i]).transpose();
  }
  return system;
}

}  // namespace

CodeScheme CodeScheme::build(int workers, int redundancy,
                             CodeConstruction construction,
                             std::uint64_t seed) {
  check_parameters(workers, redundancy);
  Matrix b(workers, workers);
  if (construction == CodeConstruction::fractional_repetition) {
    if (workers % redundancy != 0) {
      throw ConfigError("fractional repetition code requires r | K (got r=" +
                        std::to_string(redundancy) +
                        ", K=" + std::to_string(workers) + ")");
    }
    fill_fractional(b, redundancy);
    return CodeScheme(std::move(b), redundancy, construction);
  }

  for (int attempt = 0; attempt < kBuildAttempts; ++attempt) {
    Stream stream = make_stream({static_cast<std::uint64_t>(StreamTag::code),
                                 seed, static_cast<std::uint64_t>(workers),
                                 static_cast<std::uint64_t>(redundancy),
                                 static_cast<std::uint64_t>(attempt)});
    if (!fill_cyclic(b, redundancy, stream)) continue;
    CodeScheme scheme(b, redundancy, construction);
    if (well_conditioned(scheme, stream)) return scheme;
  }
  throw NumericalError("could not build a well-conditioned cyclic code for K=" +
                       std::to_string(workers) +
                       ", r=" + std::to_string(redundancy));
}

CodeScheme CodeScheme::from_matrix(Matrix encoding, int redundancy,
                                   CodeConstruction construction) {
  const int n = static_cast<int>(encoding.rows());
  if (encoding.cols() != n) throw ConfigError("encoding matrix must be square");
  check_parameters(n, redundancy);
  for (int k = 0; k < n; ++k) {
    const auto row_weight = (encoding.row(k).array() != 0.0).count();
    const auto col_weight = (encoding.col(k).array() != 0.0).count();
    if (row_weight != redundancy || col_weight != redundancy) {
      throw ConfigError("encoding matrix row and column weights must equal r");
    }
  }
  return CodeScheme(std::move(encoding), redundancy, construction);
}

double CodeScheme::decode_condition(std::span<const int> nonstragglers) const {
  const Matrix system = decode_system(encoding_, nonstragglers);
  Eigen::JacobiSVD<Matrix> svd(system);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  return smallest > 0.0 ? sv[0] / smallest
                        : std::numeric_limits<double>::infinity();
}

DecodeVector CodeScheme::decode_vector(
    std::span<const int> nonstragglers) const {
  const int n = workers();
  if (static_cast<int>(nonstragglers.size()) != decode_set_size()) {
    throw ConfigError("decode set must contain K - r + 1 = " +
                      std::to_string(decode_set_size()) + " workers");
  }
  DecodeVector out;
  out.support.assign(nonstragglers.begin(), nonstragglers.end());
  std::sort(out.support.begin(), out.support.end());
  for (std::size_t i = 0; i < out.support.size(); ++i) {
    if (out.support[i] < 0 || out.support[i] >= n ||
        (i > 0 && out.support[i] == out.support[i - 1])) {
      throw ConfigError("decode set holds an invalid or repeated worker id");
    }
  }
  const Matrix system = decode_system(encoding_, out.support);
  const Vector ones = Vector::Ones(n);
  out.coefficients = system.colPivHouseholderQr().solve(ones);
  out.residual = (system * out.coefficients - ones).cwiseAbs().maxCoeff();
  if (!(out.residual <= kDecodeTolerance)) {
    throw DecodeError("decode residual " + std::to_string(out.residual) +
                      " exceeds tolerance; the code cannot serve this set");
  }
  return out;
}

std::vector<std::vector<int>> CodeScheme::shard_assignment() const {
  std::vector<std::vector<int>> shards(static_cast<std::size_t>(workers()));
  for (int k = 0; k < workers(); ++k) {
    for (int s = 0; s < workers(); ++s) {
      if (encoding_(k, s) != 0.0) shards[k].push_back(s);
    }
  }
  return shards;
}

}  // namespace scmc
