#ifndef SCMC_PROTOCOLS_HPP
#define SCMC_PROTOCOLS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "scmc/coding.hpp"
#include "scmc/model.hpp"
#include "scmc/stats.hpp"
#include "scmc/types.hpp"

namespace scmc {

enum class Scheme { plain, grouped, coded };

struct WorkerGroup {
  std::vector<int> workers;
  std::vector<int> shards;
};

/// Which shards each worker holds. Plain and coded allocations list one
/// group per worker; grouped allocations list the worker/shard groups.
struct Allocation {
  Scheme scheme = Scheme::plain;
  int redundancy = 1;
  std::vector<std::vector<int>> shards_of;
  std::vector<WorkerGroup> groups;
  std::vector<int> group_of;
};

/// plain: S_k = {k}, requires r = 1.
/// grouped: floor(K/r) groups of r workers holding contiguous blocks of r
///   shards, plus one group of K mod r workers and shards when r does not
///   divide K.
/// coded: S_k read off the nonzero entries of `code`, which is required.
Allocation allocate(Scheme scheme, int workers, int redundancy,
                    const CodeScheme* code = nullptr);

/// W_s = (sum_m C_m^{-1})^{-1} C_s^{-1}. Every covariance must be SPD.
std::vector<Matrix> consensus_weights(std::span<const Matrix> covariances);

/// Keyed subposterior draws. Every (worker, shard, batch) triple, or
/// (shard, batch) pair for common randomness, owns its own stream derived
/// from (seed, run), so draws do not depend on event order.
class SampleSource {
 public:
  SampleSource(std::span<const GaussianSubposterior> subs, std::uint64_t seed,
               std::uint64_t run)
      : subs_(subs), seed_(seed), run_(run) {}

  /// Worker-private draw for batch `batch` (1-based) of shard `shard`.
  ParamVector independent(int worker, int shard, long batch) const;

  /// Draw shared by every worker holding `shard`.
  ParamVector common(int shard, long batch) const;

  Eigen::Index dim() const { return subs_.front().dim(); }
  int shards() const { return static_cast<int>(subs_.size()); }

 private:
  std::span<const GaussianSubposterior> subs_;
  std::uint64_t seed_;
  std::uint64_t run_;
};

/// Server side of CMC and G-CMC, indexed by shard.
///
/// Samples of each shard are kept in arrival order; the l-th global sample
/// pairs the l-th sample of every shard. Covariance estimates use every
/// sample received so far, and all produced globals are re-weighted with the
/// latest estimates. Cross-shard outer-product sums over the paired samples
/// are accumulated at production so the second moment of the recomputed
/// globals is available without materializing them.
class ConsensusServer {
 public:
  ConsensusServer(int shards, Eigen::Index dim, double sigma2);

  void receive(int shard, ParamVector theta);

  /// Produces every global whose index is now complete; returns how many.
  int try_produce();

  long produced() const { return produced_; }
  int shards() const { return static_cast<int>(samples_.size()); }
  long received(int shard) const;
  const RunningMoments& moments(int shard) const { return moments_[shard]; }

  /// W_s = (sum_m C_m^{-1})^{-1} C_s^{-1} from the current estimates.
  std::vector<Matrix> weights() const;

  /// theta^l(t) for every produced l.
  std::vector<ParamVector> globals() const;

  /// (1/L) sum_l theta^l(t) theta^l(t)^T.
  Matrix global_second_moment() const;

 private:
  Eigen::Index dim_;
  double sigma2_;
  long produced_ = 0;
  std::vector<std::vector<ParamVector>> samples_;
  std::vector<RunningMoments> moments_;
  Matrix cross_;  // lower triangle of sum_l x^l x^l^T, x^l stacked by shard
};

/// Worker-side encoding: sum_i b_k(s_i) C_{k,s_i}^{-1} theta_{s_i}, with
/// each C taken from `moments` (already updated with this batch).
Vector ccmc_worker_emit(std::span<const ParamVector> samples,
                        std::span<const RunningMoments> moments,
                        std::span<const double> coefficients, double sigma2);

/// Worker k of the coded protocol. Keeps one accumulator per held shard.
class CodedWorker {
 public:
  CodedWorker(std::vector<int> shards, std::vector<double> coefficients,
              Eigen::Index dim);

  /// Absorbs one batch (one sample per held shard, in shard order) and
  /// returns the encoded transmission.
  Vector emit(std::span<const ParamVector> batch, double sigma2);

  const std::vector<int>& shards() const { return shards_; }
  const RunningMoments& moments(std::size_t i) const { return moments_[i]; }

 private:
  std::vector<int> shards_;
  std::vector<double> coefficients_;
  std::vector<RunningMoments> moments_;
};

/// Server side of C-CMC.
///
/// Index l is decoded once K-r+1 transmissions for it have arrived, using
/// the first K-r+1 senders. Decode vectors are memoized per sender set.
/// Globals are theta^l = (sigma2 I + D_hat)^{-1} phi^l with the latest
/// D_hat, recomputed for every l.
class CodedServer {
 public:
  CodedServer(const CodeScheme& scheme, Eigen::Index dim, double sigma2);

  void receive(int worker, long batch, Vector encoded);
  int try_produce();

  long produced() const { return static_cast<long>(decoded_.size()); }
  const std::vector<Vector>& decoded() const { return decoded_; }
  const DecodedMoments& decoded_moments() const { return moments_; }
  /// Sorted sender set used to decode index l (1-based).
  const std::vector<int>& decode_set(long batch) const {
    return decode_sets_[batch - 1];
  }

  std::vector<ParamVector> globals() const;
  Matrix global_second_moment() const;

 private:
  const DecodeVector& lookup(const std::vector<int>& senders);

  const CodeScheme* scheme_;
  Eigen::Index dim_;
  double sigma2_;
  std::map<long, std::vector<std::pair<int, Vector>>> pending_;
  std::map<std::vector<int>, DecodeVector> decode_cache_;
  std::vector<Vector> decoded_;
  std::vector<std::vector<int>> decode_sets_;
  DecodedMoments moments_;
};

/// A protocol run couples worker-side sample production with the server.
class Protocol {
 public:
  virtual ~Protocol() = default;

  /// Worker `worker` completed batch `batch` (1-based); its payload is
  /// computed and delivered to the server.
  virtual void on_batch(int worker, long batch) = 0;

  /// Produces whatever globals the received batches allow; returns the
  /// number of new ones.
  virtual int try_produce() = 0;

  virtual long produced() const = 0;
  virtual std::vector<ParamVector> globals() const = 0;
  virtual Matrix global_second_moment() const = 0;

  /// False if no global can ever be produced with only `alive` workers.
  virtual bool can_progress(std::span<const char> alive) const = 0;
};

class CmcProtocol final : public Protocol {
 public:
  CmcProtocol(int workers, SampleSource source, double sigma2);

  void on_batch(int worker, long batch) override;
  int try_produce() override { return server_.try_produce(); }
  long produced() const override { return server_.produced(); }
  std::vector<ParamVector> globals() const override {
    return server_.globals();
  }
  Matrix global_second_moment() const override {
    return server_.global_second_moment();
  }
  bool can_progress(std::span<const char> alive) const override;

  const ConsensusServer& server() const { return server_; }

 private:
  SampleSource source_;
  ConsensusServer server_;
};

class GroupedProtocol final : public Protocol {
 public:
  GroupedProtocol(Allocation allocation, SampleSource source, double sigma2);

  void on_batch(int worker, long batch) override;
  int try_produce() override { return server_.try_produce(); }
  long produced() const override { return server_.produced(); }
  std::vector<ParamVector> globals() const override {
    return server_.globals();
  }
  Matrix global_second_moment() const override {
    return server_.global_second_moment();
  }
  bool can_progress(std::span<const char> alive) const override;

  const ConsensusServer& server() const { return server_; }
  const Allocation& allocation() const { return allocation_; }

 private:
  Allocation allocation_;
  SampleSource source_;
  ConsensusServer server_;
};

class CodedProtocol final : public Protocol {
 public:
  CodedProtocol(const CodeScheme& scheme, SampleSource source, double sigma2);

  void on_batch(int worker, long batch) override;
  int try_produce() override { return server_.try_produce(); }
  long produced() const override { return server_.produced(); }
  std::vector<ParamVector> globals() const override {
    return server_.globals();
  }
  Matrix global_second_moment() const override {
    return server_.global_second_moment();
  }
  bool can_progress(std::span<const char> alive) const override;

  const CodedServer& server() const { return server_; }
  const CodedWorker& worker(int k) const { return workers_[k]; }

 private:
  const CodeScheme* scheme_;
  SampleSource source_;
  double sigma2_;
  std::vector<CodedWorker> workers_;
  CodedServer server_;
};

}  // namespace scmc

#endif  // SCMC_PROTOCOLS_HPP
