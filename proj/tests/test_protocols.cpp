#include <algorithm>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scmc/coding.hpp"
#include "scmc/model.hpp"
#include "scmc/protocols.hpp"

namespace scmc {
namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

Matrix second_moment_of(const std::vector<ParamVector>& xs) {
  Matrix m = Matrix::Zero(xs.front().size(), xs.front().size());
  for (const auto& x : xs) m += x * x.transpose();
  return m / static_cast<double>(xs.size());
}

TEST(Allocate, PlainFiveWorkers) {
  const auto a = allocate(Scheme::plain, 5, 1);
  ASSERT_EQ(a.shards_of.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(a.shards_of[k], std::vector<int>{k});
  EXPECT_EQ(a.groups.size(), 5u);
}

TEST(Allocate, GroupedFortyByFour) {
  const auto a = allocate(Scheme::grouped, 40, 4);
  ASSERT_EQ(a.groups.size(), 10u);
  for (std::size_t g = 0; g < 10; ++g) {
    EXPECT_EQ(a.groups[g].workers.size(), 4u);
    EXPECT_EQ(a.groups[g].shards, a.groups[g].workers);
    EXPECT_EQ(a.groups[g].shards.front(), static_cast<int>(4 * g));
  }
  EXPECT_EQ(a.group_of[13], 3);
  EXPECT_EQ(a.shards_of[13], (std::vector<int>{12, 13, 14, 15}));
}

TEST(Allocate, GroupedRemainder) {
  const auto a = allocate(Scheme::grouped, 5, 2);
  ASSERT_EQ(a.groups.size(), 3u);
  EXPECT_EQ(a.groups[0].workers, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.groups[1].workers, (std::vector<int>{2, 3}));
  EXPECT_EQ(a.groups[2].workers, (std::vector<int>{4}));
  EXPECT_EQ(a.shards_of[4], std::vector<int>{4});
}

TEST(Allocate, Rejections) {
  EXPECT_THROW(allocate(Scheme::plain, 5, 2), ConfigError);
  EXPECT_THROW(allocate(Scheme::grouped, 3, 5), ConfigError);
  EXPECT_THROW(allocate(Scheme::coded, 3, 2, nullptr), ConfigError);
  EXPECT_THROW(allocate(Scheme::grouped, 0, 1), ConfigError);
}

TEST(Allocate, CodedMatchesCode) {
  const auto code = build_code(3, 2, CodeConstruction::cyclic);
  const auto a = allocate(Scheme::coded, 3, 2, &code);
  EXPECT_EQ(a.shards_of[2], (std::vector<int>{0, 2}));
}

TEST(ConsensusWeights, PartitionOfIdentity) {
  Stream stream(4);
  for (int k : {1, 3, 5, 40}) {
    std::vector<Matrix> covs;
    for (int i = 0; i < k; ++i) covs.push_back(oracle::random_spd(5, stream, 0.1));
    const auto w = consensus_weights(covs);
    Matrix total = Matrix::Zero(5, 5);
    for (const auto& m : w) total += m;
    EXPECT_LT((total - Matrix::Identity(5, 5)).norm(), 1e-10);
  }
}

TEST(ConsensusWeights, MatchesPrecisionFormula) {
  Stream stream(8);
  std::vector<Matrix> covs;
  for (int i = 0; i < 4; ++i) covs.push_back(oracle::random_spd(3, stream, 0.2));
  const auto w = consensus_weights(covs);
  Matrix prec = Matrix::Zero(3, 3);
  for (const auto& c : covs) prec += c.inverse();
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((w[i] - prec.inverse() * covs[i].inverse()).norm(), 1e-10);
  }
}

TEST(ConsensusServer, SingleShardReturnsSamples) {
  Stream stream(2);
  ConsensusServer server(1, 3, 1e-3);
  std::vector<ParamVector> xs;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(Vector::Random(3));
    server.receive(0, xs.back());
  }
  EXPECT_EQ(server.try_produce(), 20);
  const auto g = server.globals();
  for (int i = 0; i < 20; ++i) EXPECT_LT((g[i] - xs[i]).norm(), 1e-12);
}

TEST(ConsensusServer, EqualEstimatesAverage) {
  // Shifted copies of one sequence share a covariance, so W_s = I/K.
  ConsensusServer server(3, 2, 1e-3);
  std::vector<ParamVector> seq;
  for (int i = 0; i < 10; ++i) seq.push_back(Vector::Random(2));
  const Vector shift[3] = {Vector::Zero(2), Vector::Constant(2, 1.0),
                           Vector::Constant(2, -4.0)};
  for (int s = 0; s < 3; ++s)
    for (const auto& x : seq) server.receive(s, x + shift[s]);
  server.try_produce();
  const auto g = server.globals();
  for (int i = 0; i < 10; ++i) {
    const Vector expect = seq[i] + (shift[0] + shift[1] + shift[2]) / 3.0;
    EXPECT_LT((g[i] - expect).norm(), 1e-9);
  }
}

TEST(ConsensusServer, ProducesOnlyCompleteIndices) {
  ConsensusServer server(2, 1, 1e-3);
  server.receive(0, vec1(1));
  server.receive(0, vec1(2));
  EXPECT_EQ(server.try_produce(), 0);
  server.receive(1, vec1(3));
  EXPECT_EQ(server.try_produce(), 1);
  EXPECT_EQ(server.try_produce(), 0);
  EXPECT_EQ(server.produced(), 1);
  EXPECT_EQ(server.received(0), 2);
}

TEST(ConsensusServer, NoGlobalsBeforeProduction) {
  ConsensusServer server(2, 2, 1e-3);
  EXPECT_TRUE(server.globals().empty());
  EXPECT_THROW(server.global_second_moment(), NumericalError);
}

TEST(ConsensusServer, CrossMomentMatchesMaterialized) {
  Stream stream(21);
  const auto subs = make_toeplitz_subposteriors(4, 3);
  ConsensusServer server(4, 3, 1e-3);
  for (int round = 0; round < 5; ++round) {
    for (int i = 0; i < 30; ++i)
      for (int s = 0; s < 4; ++s)
        server.receive(s, sample_subposterior(subs[s], stream));
    server.try_produce();
    const Matrix fast = server.global_second_moment();
    const Matrix slow = second_moment_of(server.globals());
    EXPECT_LT((fast - slow).norm() / slow.norm(), 1e-10);
  }
}

TEST(CcmcWorkerEmit, HandExample) {
  RunningMoments a(1), b(1);
  for (double x : {-2.0, 0.0, 0.0, 2.0}) a.update(vec1(x));
  for (double x : {-2.0, 2.0}) b.update(vec1(x));
  const std::vector<RunningMoments> moments{a, b};
  const std::vector<ParamVector> samples{vec1(6), vec1(8)};
  const std::vector<double> coeffs{1.0, 1.0};
  EXPECT_NEAR(ccmc_worker_emit(samples, moments, coeffs, 0.0)[0], 5.0, 1e-12);
}

TEST(CcmcWorkerEmit, FirstSampleScalesByInverseSigma2) {
  RunningMoments m(2);
  const ParamVector theta = (Vector(2) << 0.3, -0.7).finished();
  m.update(theta);
  const std::vector<RunningMoments> moments{m};
  const std::vector<ParamVector> samples{theta};
  const std::vector<double> coeffs{1.0};
  const Vector out = ccmc_worker_emit(samples, moments, coeffs, 1e-3);
  EXPECT_LT((out - theta / 1e-3).norm(), 1e-9);
}

TEST(CodedServer, UnitCovarianceDecodeSumsShards) {
  // A single sample per shard with sigma2 = 1 gives C_hat = I, so the
  // decoded phi must be the plain sum of the three shard draws.
  const auto code = build_code(3, 2, CodeConstruction::cyclic, 4);
  const auto assign = code.shard_assignment();
  const std::vector<ParamVector> theta{
      (Vector(2) << 1.0, 2.0).finished(), (Vector(2) << -3.0, 0.5).finished(),
      (Vector(2) << 0.25, 4.0).finished()};
  for (const std::vector<int>& senders :
       {std::vector<int>{0, 1}, std::vector<int>{1, 2}, std::vector<int>{2, 0}}) {
    CodedServer server(code, 2, 1.0);
    for (int k : senders) {
      CodedWorker worker(assign[k],
                         {code.encoding()(k, assign[k][0]),
                          code.encoding()(k, assign[k][1])},
                         2);
      const std::vector<ParamVector> batch{theta[assign[k][0]],
                                           theta[assign[k][1]]};
      server.receive(k, 1, worker.emit(batch, 1.0));
    }
    ASSERT_EQ(server.try_produce(), 1);
    EXPECT_LT((server.decoded()[0] - (theta[0] + theta[1] + theta[2])).norm(),
              1e-9);
  }
}

TEST(CodedServer, WaitsForDecodeSetAndDropsLateReplies) {
  const auto code = build_code(3, 2, CodeConstruction::cyclic, 4);
  CodedServer server(code, 1, 1e-3);
  server.receive(2, 2, vec1(1.0));
  server.receive(0, 2, vec1(1.0));
  EXPECT_EQ(server.try_produce(), 0);  // index 1 missing
  server.receive(1, 1, vec1(1.0));
  EXPECT_EQ(server.try_produce(), 0);
  server.receive(2, 1, vec1(1.0));
  EXPECT_EQ(server.try_produce(), 2);
  EXPECT_EQ(server.decode_set(1), (std::vector<int>{1, 2}));
  EXPECT_EQ(server.decode_set(2), (std::vector<int>{0, 2}));
  server.receive(0, 1, vec1(7.0));
  EXPECT_EQ(server.try_produce(), 0);
  EXPECT_EQ(server.produced(), 2);
}

TEST(CodedProtocol, CommonRandomnessSharesEstimates) {
  const auto subs = make_toeplitz_subposteriors(3, 2);
  const auto code = build_code(3, 2, CodeConstruction::cyclic, 1);
  CodedProtocol protocol(code, SampleSource(subs, 5, 0), 1e-3);
  for (long l = 1; l <= 25; ++l)
    for (int k = 0; k < 3; ++k) protocol.on_batch(k, l);
  // Worker 0 holds {0, 1}, worker 1 holds {1, 2}: shard 1 is shared.
  const auto& m0 = protocol.worker(0).moments(1);
  const auto& m1 = protocol.worker(1).moments(0);
  EXPECT_EQ(m0.sum(), m1.sum());
  EXPECT_EQ(m0.sum_outer(), m1.sum_outer());
}

TEST(CodedProtocol, DecodeMatchesDirectSum) {
  const auto subs = make_toeplitz_subposteriors(5, 3);
  const auto code = build_code(5, 2, CodeConstruction::cyclic, 1);
  const double sigma2 = 1e-3;
  Stream order(77);
  for (std::uint64_t run = 0; run < 5; ++run) {
    SampleSource source(subs, 3, run);
    CodedProtocol protocol(code, source, sigma2);
    std::vector<RunningMoments> direct(5, RunningMoments(3));
    for (long l = 1; l <= 100; ++l) {
      std::vector<int> ks(5);
      std::iota(ks.begin(), ks.end(), 0);
      std::shuffle(ks.begin(), ks.end(), order);
      for (int k : ks) protocol.on_batch(k, l);
      protocol.try_produce();
      Vector phi = Vector::Zero(3);
      for (int s = 0; s < 5; ++s) {
        const ParamVector theta = source.common(s, l);
        direct[s].update(theta);
        phi += direct[s].regularized_cov(sigma2).inverse() * theta;
      }
      const Vector& got = protocol.server().decoded()[l - 1];
      EXPECT_LE((got - phi).norm() / phi.norm(), 1e-9) << "l=" << l;
    }
  }
}

TEST(CodedProtocol, CrossMomentMatchesMaterialized) {
  const auto subs = make_toeplitz_subposteriors(5, 3);
  const auto code = build_code(5, 2, CodeConstruction::cyclic, 1);
  CodedProtocol protocol(code, SampleSource(subs, 9, 0), 0.3);
  for (long l = 1; l <= 60; ++l)
    for (int k = 0; k < 5; ++k) protocol.on_batch(k, l);
  protocol.try_produce();
  const Matrix slow = second_moment_of(protocol.globals());
  EXPECT_LT((protocol.global_second_moment() - slow).norm() / slow.norm(),
            1e-9);
}

TEST(GroupedProtocol, CrossMomentMatchesMaterialized) {
  const auto subs = make_toeplitz_subposteriors(5, 3);
  GroupedProtocol protocol(allocate(Scheme::grouped, 5, 2),
                           SampleSource(subs, 9, 0), 1e-3);
  for (long l = 1; l <= 60; ++l)
    for (int k : {0, 3, 4}) protocol.on_batch(k, l);
  EXPECT_EQ(protocol.try_produce(), 60);
  const Matrix slow = second_moment_of(protocol.globals());
  EXPECT_LT((protocol.global_second_moment() - slow).norm() / slow.norm(),
            1e-10);
}

TEST(Protocols, CanProgress) {
  const auto subs = make_toeplitz_subposteriors(5, 2);
  const auto code = build_code(5, 2, CodeConstruction::cyclic, 1);
  SampleSource src(subs, 1, 0);
  CmcProtocol plain(5, src, 1e-3);
  GroupedProtocol grouped(allocate(Scheme::grouped, 5, 2), src, 1e-3);
  CodedProtocol coded(code, src, 1e-3);
  const std::vector<char> all(5, 1);
  std::vector<char> one_dead = all;
  one_dead[1] = 0;
  std::vector<char> two_dead = one_dead;
  two_dead[2] = 0;
  std::vector<char> remainder_dead = all;
  remainder_dead[4] = 0;
  EXPECT_TRUE(plain.can_progress(all));
  EXPECT_FALSE(plain.can_progress(one_dead));
  EXPECT_TRUE(grouped.can_progress(two_dead));
  EXPECT_FALSE(grouped.can_progress(remainder_dead));
  EXPECT_TRUE(coded.can_progress(one_dead));
  EXPECT_FALSE(coded.can_progress(two_dead));
}

TEST(SampleSource, KeyedDrawsAreOrderFree) {
  const auto subs = make_toeplitz_subposteriors(3, 2);
  SampleSource a(subs, 1, 0), b(subs, 1, 0), c(subs, 1, 1);
  const ParamVector late = a.independent(2, 1, 9);
  EXPECT_EQ(b.independent(2, 1, 9), late);
  EXPECT_NE(c.independent(2, 1, 9), late);
  EXPECT_NE(a.independent(1, 1, 9), late);
  EXPECT_NE(a.common(1, 9), late);
  EXPECT_EQ(a.common(1, 9), b.common(1, 9));
}

}  // namespace
}  // namespace scmc
