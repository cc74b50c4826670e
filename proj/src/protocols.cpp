#include "scmc/protocols.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "scmc/rng.hpp"

namespace scmc {
namespace {

constexpr std::uint64_t kCommonWorker = std::numeric_limits<std::uint64_t>::max();

Matrix inverse_spd(const Matrix& m, const char* what) {
  return spd_factor(m, what).solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace

Allocation allocate(Scheme scheme, int workers, int redundancy,
                    const CodeScheme* code) {
  if (workers < 1) throw ConfigError("worker count K must be >= 1");
  if (redundancy < 1 || redundancy > workers) {
    throw ConfigError("r must satisfy 1 <= r <= K (got r=" +
                      std::to_string(redundancy) +
                      ", K=" + std::to_string(workers) + ")");
  }
  Allocation a;
  a.scheme = scheme;
  a.redundancy = redundancy;
  a.shards_of.resize(static_cast<std::size_t>(workers));
  a.group_of.resize(static_cast<std::size_t>(workers));

  switch (scheme) {
    case Scheme::plain:
      if (redundancy != 1) {
        throw ConfigError("plain CMC requires r = 1 (got r=" +
                          std::to_string(redundancy) + ")");
      }
      for (int k = 0; k < workers; ++k) {
        a.shards_of[k] = {k};
        a.groups.push_back({{k}, {k}});
        a.group_of[k] = k;
      }
      break;
    case Scheme::grouped:
      for (int first = 0; first < workers; first += redundancy) {
        const int last = std::min(first + redundancy, workers);
        WorkerGroup g;
        for (int i = first; i < last; ++i) {
          g.workers.push_back(i);
          g.shards.push_back(i);
        }
        for (int k : g.workers) {
          a.shards_of[k] = g.shards;
          a.group_of[k] = static_cast<int>(a.groups.size());
        }
        a.groups.push_back(std::move(g));
      }
      break;
    case Scheme::coded:
      if (code == nullptr) throw ConfigError("coded allocation needs a code");
      if (code->workers() != workers || code->redundancy() != redundancy) {
        throw ConfigError("code dimensions do not match K and r");
      }
      a.shards_of = code->shard_assignment();
      for (int k = 0; k < workers; ++k) {
        a.groups.push_back({{k}, a.shards_of[k]});
        a.group_of[k] = k;
      }
      break;
  }
  return a;
}

ParamVector SampleSource::independent(int worker, int shard,
                                      long batch) const {
  Stream stream = make_stream({static_cast<std::uint64_t>(StreamTag::sample),
                               seed_, run_, static_cast<std::uint64_t>(worker),
                               static_cast<std::uint64_t>(shard),
                               static_cast<std::uint64_t>(batch)});
  return sample_subposterior(subs_[shard], stream);
}

ParamVector SampleSource::common(int shard, long batch) const {
  Stream stream = make_stream({static_cast<std::uint64_t>(StreamTag::sample),
                               seed_, run_, kCommonWorker,
                               static_cast<std::uint64_t>(shard),
                               static_cast<std::uint64_t>(batch)});
  return sample_subposterior(subs_[shard], stream);
}

// ---------------------------------------------------------------------------

ConsensusServer::ConsensusServer(int shards, Eigen::Index dim, double sigma2)
    : dim_(dim),
      sigma2_(sigma2),
      samples_(static_cast<std::size_t>(shards)),
      moments_(static_cast<std::size_t>(shards), RunningMoments(dim)),
      cross_(Matrix::Zero(shards * dim, shards * dim)) {}

void ConsensusServer::receive(int shard, ParamVector theta) {
  moments_[shard].update(theta);
  samples_[shard].push_back(std::move(theta));
}

long ConsensusServer::received(int shard) const {
  return static_cast<long>(samples_[shard].size());
}

int ConsensusServer::try_produce() {
  std::size_t complete = samples_.front().size();
  for (const auto& s : samples_) complete = std::min(complete, s.size());
  int fresh = 0;
  Vector stacked(cross_.rows());
  for (auto l = static_cast<std::size_t>(produced_); l < complete; ++l) {
    for (std::size_t s = 0; s < samples_.size(); ++s) {
      stacked.segment(static_cast<Eigen::Index>(s) * dim_, dim_) =
          samples_[s][l];
    }
    cross_.selfadjointView<Eigen::Lower>().rankUpdate(stacked);
    ++produced_;
    ++fresh;
  }
  return fresh;
}

std::vector<Matrix> consensus_weights(std::span<const Matrix> covariances) {
  if (covariances.empty()) throw ConfigError("no covariance estimates");
  const Eigen::Index d = covariances.front().rows();
  std::vector<Matrix> weights;
  weights.reserve(covariances.size());
  Matrix total = Matrix::Zero(d, d);
  for (const auto& c : covariances) {
    weights.push_back(inverse_spd(c, "covariance estimate"));
    total += weights.back();
  }
  const auto llt = spd_factor(total, "precision sum");
  for (auto& w : weights) w = llt.solve(w);
  return weights;
}

std::vector<Matrix> ConsensusServer::weights() const {
  std::vector<Matrix> covs;
  covs.reserve(moments_.size());
  for (const auto& m : moments_) covs.push_back(m.regularized_cov(sigma2_));
  return consensus_weights(covs);
}

std::vector<ParamVector> ConsensusServer::globals() const {
  std::vector<ParamVector> out;
  if (produced_ == 0) return out;
  const auto w = weights();
  out.reserve(static_cast<std::size_t>(produced_));
  for (long l = 0; l < produced_; ++l) {
    Vector theta = Vector::Zero(dim_);
    for (std::size_t s = 0; s < samples_.size(); ++s) {
      theta.noalias() += w[s] * samples_[s][l];
    }
    out.push_back(std::move(theta));
  }
  return out;
}

Matrix ConsensusServer::global_second_moment() const {
  if (produced_ == 0) throw NumericalError("no global samples produced yet");
  const auto w = weights();
  Matrix stacked(dim_, cross_.cols());
  for (std::size_t s = 0; s < w.size(); ++s) {
    stacked.middleCols(static_cast<Eigen::Index>(s) * dim_, dim_) = w[s];
  }
  const Matrix right = cross_.selfadjointView<Eigen::Lower>() *
                       stacked.transpose();
  Matrix moment = stacked * right / static_cast<double>(produced_);
  return 0.5 * (moment + moment.transpose());
}

// ---------------------------------------------------------------------------

Vector ccmc_worker_emit(std::span<const ParamVector> samples,
                        std::span<const RunningMoments> moments,
                        std::span<const double> coefficients, double sigma2) {
  if (samples.size() != moments.size() ||
      samples.size() != coefficients.size()) {
    throw ConfigError("encoding needs one sample and estimate per shard");
  }
  Vector encoded = Vector::Zero(samples.front().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto llt =
        spd_factor(moments[i].regularized_cov(sigma2), "covariance estimate");
    encoded += coefficients[i] * llt.solve(samples[i]);
  }
  return encoded;
}

CodedWorker::CodedWorker(std::vector<int> shards,
                         std::vector<double> coefficients, Eigen::Index dim)
    : shards_(std::move(shards)),
      coefficients_(std::move(coefficients)),
      moments_(shards_.size(), RunningMoments(dim)) {}

Vector CodedWorker::emit(std::span<const ParamVector> batch, double sigma2) {
  if (batch.size() != shards_.size()) {
    throw ConfigError("batch must hold one sample per held shard");
  }
  for (std::size_t i = 0; i < batch.size(); ++i) moments_[i].update(batch[i]);
  return ccmc_worker_emit(batch, moments_, coefficients_, sigma2);
}

CodedServer::CodedServer(const CodeScheme& scheme, Eigen::Index dim,
                         double sigma2)
    : scheme_(&scheme), dim_(dim), sigma2_(sigma2), moments_(dim) {}

void CodedServer::receive(int worker, long batch, Vector encoded) {
  if (batch <= produced()) return;  // straggler reply for a decoded index
  pending_[batch].emplace_back(worker, std::move(encoded));
}

const DecodeVector& CodedServer::lookup(const std::vector<int>& senders) {
  auto it = decode_cache_.find(senders);
  if (it == decode_cache_.end()) {
    it = decode_cache_.emplace(senders, scheme_->decode_vector(senders)).first;
  }
  return it->second;
}

int CodedServer::try_produce() {
  const auto needed = static_cast<std::size_t>(scheme_->decode_set_size());
  int fresh = 0;
  while (true) {
    auto it = pending_.find(produced() + 1);
    if (it == pending_.end() || it->second.size() < needed) break;
    auto& arrivals = it->second;
    std::vector<int> senders;
    senders.reserve(needed);
    for (std::size_t i = 0; i < needed; ++i) senders.push_back(arrivals[i].first);
    std::sort(senders.begin(), senders.end());
    const DecodeVector& dv = lookup(senders);

    Vector phi = Vector::Zero(dim_);
    for (std::size_t i = 0; i < needed; ++i) {
      const auto pos = std::lower_bound(dv.support.begin(), dv.support.end(),
                                        arrivals[i].first) -
                       dv.support.begin();
      phi += dv.coefficients[pos] * arrivals[i].second;
    }
    moments_.update(phi);
    decoded_.push_back(std::move(phi));
    decode_sets_.push_back(std::move(senders));
    pending_.erase(it);
    ++fresh;
  }
  return fresh;
}

std::vector<ParamVector> CodedServer::globals() const {
  std::vector<ParamVector> out;
  if (decoded_.empty()) return out;
  const Matrix dh = moments_.d_hat();
  out.reserve(decoded_.size());
  for (const auto& phi : decoded_) out.push_back(ccmc_recover(phi, dh, sigma2_));
  return out;
}

Matrix CodedServer::global_second_moment() const {
  if (decoded_.empty()) throw NumericalError("no global samples produced yet");
  Matrix system = moments_.d_hat();
  system.diagonal().array() += sigma2_;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success || llt.rcond() < 1.0 / kMaxCondition) {
    throw NumericalError("sigma2 I + D_hat is numerically singular");
  }
  const Matrix inv = llt.solve(Matrix::Identity(dim_, dim_));
  const Matrix raw = moments_.sum_outer() / static_cast<double>(produced());
  Matrix moment = inv * raw * inv;
  return 0.5 * (moment + moment.transpose());
}

// ---------------------------------------------------------------------------

CmcProtocol::CmcProtocol(int workers, SampleSource source, double sigma2)
    : source_(source), server_(workers, source.dim(), sigma2) {
  if (source.shards() != workers) {
    throw ConfigError("plain CMC needs one subposterior per worker");
  }
}

void CmcProtocol::on_batch(int worker, long batch) {
  server_.receive(worker, source_.independent(worker, worker, batch));
}

bool CmcProtocol::can_progress(std::span<const char> alive) const {
  return std::all_of(alive.begin(), alive.end(), [](char a) { return a != 0; });
}

GroupedProtocol::GroupedProtocol(Allocation allocation, SampleSource source,
                                 double sigma2)
    : allocation_(std::move(allocation)),
      source_(source),
      server_(source.shards(), source.dim(), sigma2) {
  if (allocation_.scheme != Scheme::grouped) {
    throw ConfigError("grouped protocol needs a grouped allocation");
  }
}

void GroupedProtocol::on_batch(int worker, long batch) {
  const auto& group = allocation_.groups[allocation_.group_of[worker]];
  for (int s : group.shards) {
    server_.receive(s, source_.independent(worker, s, batch));
  }
}

bool GroupedProtocol::can_progress(std::span<const char> alive) const {
  return std::all_of(
      allocation_.groups.begin(), allocation_.groups.end(),
      [&](const WorkerGroup& g) {
        return std::any_of(g.workers.begin(), g.workers.end(),
                           [&](int k) { return alive[k] != 0; });
      });
}

CodedProtocol::CodedProtocol(const CodeScheme& scheme, SampleSource source,
                             double sigma2)
    : scheme_(&scheme),
      source_(source),
      sigma2_(sigma2),
      server_(scheme, source.dim(), sigma2) {
  if (source.shards() != scheme.workers()) {
    throw ConfigError("coded protocol needs one subposterior per shard");
  }
  const auto assignment = scheme.shard_assignment();
  for (int k = 0; k < scheme.workers(); ++k) {
    std::vector<double> coefficients;
    for (int s : assignment[k]) coefficients.push_back(scheme.encoding()(k, s));
    workers_.emplace_back(assignment[k], std::move(coefficients), source.dim());
  }
}

void CodedProtocol::on_batch(int worker, long batch) {
  auto& w = workers_[worker];
  std::vector<ParamVector> samples;
  samples.reserve(w.shards().size());
  for (int s : w.shards()) samples.push_back(source_.common(s, batch));
  server_.receive(worker, batch, w.emit(samples, sigma2_));
}

bool CodedProtocol::can_progress(std::span<const char> alive) const {
  const auto live = std::count_if(alive.begin(), alive.end(),
                                  [](char a) { return a != 0; });
  return live >= scheme_->decode_set_size();
}

}  // namespace scmc
