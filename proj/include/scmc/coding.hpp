#ifndef SCMC_CODING_HPP
#define SCMC_CODING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "scmc/types.hpp"

namespace scmc {

enum class CodeConstruction { cyclic, fractional_repetition };

/// Coefficients a restricted to a non-straggler set such that a B = 1^T.
struct DecodeVector {
  std::vector<int> support;  // sorted worker ids
  Vector coefficients;       // coefficients[i] belongs to support[i]
  double residual = 0.0;     // ||a B - 1||_inf
};

/// Residual tolerated by decode_vector.
inline constexpr double kDecodeTolerance = 1e-9;

/// Encoding matrix B (K x K) with row and column weight r. Immutable once
/// built; decode vectors are computed on demand for whichever set of K-r+1
/// workers responded, so the full decoding matrix is never stored.
class CodeScheme {
 public:
  /// Cyclic codes use the randomized null-space construction: a random
  /// (r-1) x K matrix H with H 1 = 0, and row k of B supported on
  /// {k, ..., k+r-1} mod K with b_k(k) = 1 and H b_k = 0. Any K-r+1 rows
  /// then span null(H), which contains 1. Degenerate draws (a sampled
  /// decode system with condition number above 1e10) are redrawn up to 20
  /// times from seeds derived from `seed`.
  ///
  /// Fractional repetition splits workers into r groups of K/r; worker i of
  /// every group holds shard block i with unit coefficients.
  static CodeScheme build(int workers, int redundancy,
                          CodeConstruction construction,
                          std::uint64_t seed = 0);

  /// Wraps an explicit encoding matrix. Throws ConfigError unless every row
  /// and column has exactly `redundancy` nonzeros.
  static CodeScheme from_matrix(Matrix encoding, int redundancy,
                                CodeConstruction construction);

  int workers() const { return static_cast<int>(encoding_.rows()); }
  int redundancy() const { return redundancy_; }
  /// K - r + 1
  int decode_set_size() const { return workers() - redundancy_ + 1; }
  CodeConstruction construction() const { return construction_; }
  const Matrix& encoding() const { return encoding_; }

  /// Solves a B = 1 on the rows of B in `nonstragglers` by least squares.
  /// Throws ConfigError on a wrong set size or invalid id, DecodeError if
  /// the residual exceeds kDecodeTolerance.
  DecodeVector decode_vector(std::span<const int> nonstragglers) const;

  /// 2-norm condition number of the decode system for `nonstragglers`.
  double decode_condition(std::span<const int> nonstragglers) const;

  /// S_k: the r shard ids with B(k, s) != 0, in increasing order.
  std::vector<std::vector<int>> shard_assignment() const;

 private:
  CodeScheme(Matrix encoding, int redundancy, CodeConstruction construction)
      : encoding_(std::move(encoding)),
        redundancy_(redundancy),
        construction_(construction) {}

  Matrix encoding_;
  int redundancy_;
  CodeConstruction construction_;
};

inline CodeScheme build_code(int workers, int redundancy,
                             CodeConstruction construction,
                             std::uint64_t seed = 0) {
  return CodeScheme::build(workers, redundancy, construction, seed);
}

inline std::vector<std::vector<int>> shard_assignment(
    const CodeScheme& scheme) {
  return scheme.shard_assignment();
}

}  // namespace scmc

#endif  // SCMC_CODING_HPP
