#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dmimo/baseband.hpp"
#include "oracles.hpp"

using namespace dmimo;
using oracle::Mat;

namespace {

constexpr cd I{0, 1};

PackedHermitian diag(std::initializer_list<double> d) {
  PackedHermitian p(d.size());
  std::size_t i = 0;
  for (double v : d) {
    p.lower(i, i) = v;
    ++i;
  }
  return p;
}

Mat gram_of(const ComplexMatrix& h) {
  const Mat e = oracle::to_eigen(h);
  return e.adjoint() * e;
}

// Random tree on m nodes: each node attaches to an earlier one with a free slot.
TreeTopology random_tree(std::mt19937_64& g, int m, int arity) {
  std::vector<int> parents(m, TreeTopology::kCcu), used(m, 0);
  for (int n = 1; n < m; ++n) {
    int p;
    do p = std::uniform_int_distribution<int>(0, n - 1)(g);
    while (used[p] >= arity);
    parents[n] = p;
    ++used[p];
  }
  return TreeTopology::from_parents(parents, arity);
}

}  // namespace

TEST(ChannelEstimate, DividesByPilot) {
  const ComplexVector y{cd(2, 2)};
  EXPECT_EQ(estimate_channel(y, 2.0), (ComplexVector{cd(1, 1)}));
  const ComplexVector z{cd(1, -3), cd(0.5, 0.25)};
  EXPECT_EQ(estimate_channel(z, 1.0), z);
  EXPECT_THROW(estimate_channel(z, 0.0), std::invalid_argument);
}

TEST(ChannelEstimate, NoiselessPilotRecoversChannel) {
  std::mt19937_64 g(1);
  const auto h = oracle::random_vector(g, 4);
  const double p = 1.7;
  ComplexVector y(4);
  for (int k = 0; k < 4; ++k) y[k] = h[k] * p;
  PeCounter ops;
  const auto est = estimate_channel(y, p, &ops);
  for (int k = 0; k < 4; ++k) EXPECT_LT(std::abs(est[k] - h[k]), 1e-12);
  EXPECT_EQ(ops.ops, 4u);
}

TEST(LocalGram, ScalarIsSquaredMagnitude) {
  const auto b = local_gram(ComplexVector{cd(1, 1)});
  EXPECT_EQ(b(0, 0), cd(2, 0));
}

TEST(LocalGram, TwoByTwoEntries) {
  const auto b = local_gram(ComplexVector{1, I});
  EXPECT_EQ(b(0, 0), cd(1, 0));
  EXPECT_EQ(b(1, 1), cd(1, 0));
  // conj(h_0) h_1 above the diagonal, its conjugate below.
  EXPECT_EQ(b(0, 1), I);
  EXPECT_EQ(b(1, 0), -I);
}

TEST(LocalGram, ZeroVector) {
  const auto b = local_gram(ComplexVector(3));
  for (auto v : b.packed()) EXPECT_EQ(v, cd{});
}

TEST(LocalGram, MatchesOuterProductAndCountsOps) {
  std::mt19937_64 g(2);
  for (int k : {1, 2, 5, 20}) {
    auto h = oracle::random_matrix(g, 1, k);
    PeCounter ops;
    const auto b = local_gram(h.row(0), &ops);
    EXPECT_LT(oracle::rel_fro(oracle::to_eigen(b), gram_of(h)), 1e-15);
    EXPECT_EQ(ops.ops, static_cast<std::uint64_t>(k * (k + 1) / 2));
  }
}

TEST(AccumulateGram, EmptyIsZero) {
  const auto s = accumulate_gram(PackedHermitian(2), {});
  for (auto v : s.packed()) EXPECT_EQ(v, cd{});
}

TEST(AccumulateGram, SumsContributions) {
  std::mt19937_64 g(3);
  const auto h = oracle::random_matrix(g, 3, 3);
  std::vector<PackedHermitian> kids{local_gram(h.row(1)), local_gram(h.row(2))};
  const auto s = accumulate_gram(local_gram(h.row(0)), kids);
  EXPECT_LT(oracle::rel_fro(oracle::to_eigen(s), gram_of(h)), 1e-14);
}

TEST(AccumulateGram, RejectsOrderMismatch) {
  std::vector<PackedHermitian> kids{PackedHermitian(3)};
  EXPECT_THROW(accumulate_gram(PackedHermitian(2), kids), std::invalid_argument);
}

TEST(AccumulateGram, ThreeNodeTreeGivesFullGram) {
  std::mt19937_64 g(4);
  const auto h = oracle::random_matrix(g, 3, 4);
  // K > M: the Gram is singular, which CB does not care about.
  const auto w = distributed_weights(h, build_tree(3, 2), Mode::CB, 0);
  EXPECT_LT(oracle::rel_fro(oracle::to_eigen(w.gram), gram_of(h)), 1e-14);
}

TEST(AccumulateGram, HermitianDiagonalAndShapeIndependence) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(g() % 40);
    const int k = 1 + static_cast<int>(g() % 8);
    const auto h = oracle::random_matrix(g, m, k);
    const auto ref = distributed_weights(h, build_tree(m, 2), Mode::CB, 0).gram;
    double max_entry = 0;
    for (auto v : ref.packed()) max_entry = std::max(max_entry, std::abs(v));
    for (int d = 0; d < k; ++d) EXPECT_LE(std::abs(ref(d, d).imag()), 1e-12 * max_entry);
    for (int shape = 0; shape < 4; ++shape) {
      const auto tree = random_tree(g, m, 1 + static_cast<int>(g() % 4));
      const auto other = distributed_weights(h, tree, Mode::CB, 0).gram;
      EXPECT_LE(oracle::rel_fro(oracle::to_eigen(other), oracle::to_eigen(ref)), 1e-12);
    }
  }
}

TEST(InvertGram, Identity) {
  const auto d = invert_gram(PackedHermitian::identity(3), Mode::ZF, 0);
  EXPECT_LT(oracle::rel_fro(oracle::to_eigen(d), Mat::Identity(3, 3)), 1e-15);
}

TEST(InvertGram, Diagonal) {
  const auto d = invert_gram(diag({2, 4}), Mode::ZF, 0);
  EXPECT_LT(std::abs(d(0, 0) - 0.5), 1e-15);
  EXPECT_LT(std::abs(d(1, 1) - 0.25), 1e-15);
  EXPECT_EQ(d(1, 0), cd{});
}

TEST(InvertGram, RandomWellConditioned) {
  std::mt19937_64 g(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = oracle::random_matrix(g, 12, 5);
    const auto b = distributed_weights(h, build_tree(12, 2), Mode::CB, 0).gram;
    const Mat prod = oracle::to_eigen(invert_gram(b, Mode::ZF, 0)) * oracle::to_eigen(b);
    EXPECT_LT((prod - Mat::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(InvertGram, MmseAddsRegularization) {
  std::mt19937_64 g(7);
  const auto h = oracle::random_matrix(g, 6, 3);
  const auto b = local_gram(h.row(0));  // rank one, singular without regularization
  EXPECT_THROW(invert_gram(b, Mode::ZF, 0), NotPositiveDefinite);
  const auto d = invert_gram(b, Mode::MMSE, 0.5);
  const Mat ref = (oracle::to_eigen(b) + 0.5 * Mat::Identity(3, 3)).inverse();
  EXPECT_LT(oracle::rel_fro(oracle::to_eigen(d), ref), 1e-12);
  // Zero regularization is zero forcing.
  const auto full = distributed_weights(h, build_tree(6, 2), Mode::CB, 0).gram;
  EXPECT_LT(oracle::rel_fro(oracle::to_eigen(invert_gram(full, Mode::MMSE, 0)),
                            oracle::to_eigen(invert_gram(full, Mode::ZF, 0))),
            1e-15);
}

TEST(InvertGram, ReportsFailingPivot) {
  // Second column duplicates the first: the Cholesky step fails at pivot 1.
  const auto b = local_gram(ComplexVector{1, 1, 0});
  PackedHermitian c = b;
  c.lower(2, 2) = 1;
  try {
    invert_gram(c, Mode::ZF, 0);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
  EXPECT_THROW(invert_gram(b, Mode::CB, 0), std::invalid_argument);
}

TEST(LocalWeights, IdentityAndDiagonal) {
  const ComplexVector h{1, I};
  EXPECT_EQ(local_weights(PackedHermitian::identity(2), h), h);
  EXPECT_EQ(local_weights(diag({2, 3}), h), (ComplexVector{2, 3.0 * I}));
  EXPECT_THROW(local_weights(diag({2, 3}), ComplexVector(3)), std::invalid_argument);
}

TEST(LocalWeights, MatchesDenseProduct) {
  std::mt19937_64 g(8);
  const auto h = oracle::random_matrix(g, 9, 4);
  const auto d = invert_gram(distributed_weights(h, build_tree(9, 2), Mode::CB, 0).gram, Mode::ZF, 0);
  const auto v = oracle::random_vector(g, 4);
  PeCounter ops;
  const auto got = local_weights(d, v, &ops);
  const oracle::Vec ref = oracle::to_eigen(d) * oracle::to_eigen(v);
  for (int k = 0; k < 4; ++k) EXPECT_LT(std::abs(got[k] - ref(k)), 1e-12 * ref.norm());
  EXPECT_EQ(ops.ops, 16u);
}

TEST(Decode, LocalStep) {
  EXPECT_EQ(decode_local(ComplexVector(3), 0.0, {}), ComplexVector(3));
  EXPECT_EQ(decode_local(ComplexVector{2}, 3.0, {}), (ComplexVector{6}));
  const std::vector<ComplexVector> kids{{1, 2}, {10, 20}};
  EXPECT_EQ(decode_local(ComplexVector{1, I}, 2.0, kids), (ComplexVector{13, cd(22, 2)}));
  const std::vector<ComplexVector> bad{{1}};
  EXPECT_THROW(decode_local(ComplexVector{1, 2}, 1.0, bad), std::invalid_argument);
}

TEST(Decode, SevenNodeTreeMatchesCentralized) {
  std::mt19937_64 g(9);
  const auto h = oracle::random_matrix(g, 7, 2);
  const auto tree = build_tree(7, 2);
  const auto w = distributed_weights(h, tree, Mode::ZF, 0);
  const auto y = oracle::random_vector(g, 7);
  const auto got = distributed_decode(w.W, y, tree);
  const oracle::Vec ref = oracle::decoding_matrix(oracle::to_eigen(h), false, 0) * oracle::to_eigen(y);
  EXPECT_LT((oracle::to_eigen(got) - ref).norm() / ref.norm(), 1e-9);
}

TEST(Precode, InnerProductWithoutConjugation) {
  EXPECT_EQ(precode_local(ComplexVector{1, 2}, ComplexVector(2)), cd{});
  EXPECT_EQ(precode_local(ComplexVector{cd(1, 1)}, ComplexVector{cd(1, -1)}), cd(2, 0));
  EXPECT_THROW(precode_local(ComplexVector{1}, ComplexVector{1, 2}), std::invalid_argument);
}

TEST(Precode, MatchesRowTimesVector) {
  std::mt19937_64 g(10);
  const auto w = oracle::random_vector(g, 8);
  const auto q = oracle::random_vector(g, 8);
  PeCounter ops;
  const cd got = precode_local(w, q, &ops);
  const cd ref = oracle::to_eigen(w).transpose() * oracle::to_eigen(q);
  EXPECT_LT(std::abs(got - ref), 1e-13);
  EXPECT_EQ(ops.ops, 8u);
}

TEST(Centralized, ScalarZeroForcing) {
  ComplexMatrix h(1, 1);
  h(0, 0) = 2;
  const auto r = centralized_reference(h, Mode::ZF, 0);
  EXPECT_EQ(r.A(0, 0), cd(0.5, 0));
  EXPECT_EQ(r.W(0, 0), cd(0.5, 0));
}

TEST(Centralized, ConjugateBeamformingIsAdjoint) {
  std::mt19937_64 g(11);
  const auto h = oracle::random_matrix(g, 5, 3);
  const auto r = centralized_reference(h, Mode::CB, 0);
  EXPECT_EQ(r.A.data(), h.adjoint().data());
  EXPECT_EQ(r.W.data(), h.conj().data());
}

TEST(Centralized, ZeroForcingIsLeftInverse) {
  std::mt19937_64 g(12);
  for (Mode mode : {Mode::ZF, Mode::MMSE}) {
    const auto h = oracle::random_matrix(g, 8, 3);
    const auto r = centralized_reference(h, mode, mode == Mode::MMSE ? 0.2 : 0);
    const Mat he = oracle::to_eigen(h);
    const Mat ref = oracle::decoding_matrix(he, false, mode == Mode::MMSE ? 0.2 : 0);
    EXPECT_LT(oracle::rel_fro(oracle::to_eigen(r.A), ref), 1e-12);
    // A = W^T in every mode.
    EXPECT_LT(oracle::rel_fro(oracle::to_eigen(r.A), oracle::to_eigen(r.W).transpose()), 1e-15);
    if (mode == Mode::ZF) {
      EXPECT_LT((oracle::to_eigen(r.A) * he - Mat::Identity(3, 3)).norm(), 1e-9);
    }
  }
}

TEST(Centralized, RejectsRankDeficientChannel) {
  ComplexMatrix h(3, 2);
  h(0, 0) = h(0, 1) = 1;
  h(1, 0) = h(1, 1) = 2;
  h(2, 0) = h(2, 1) = I;
  EXPECT_THROW(centralized_reference(h, Mode::ZF, 0), RankDeficient);
  EXPECT_NO_THROW(centralized_reference(h, Mode::MMSE, 0.1));
  EXPECT_NO_THROW(centralized_reference(h, Mode::CB, 0));
}

TEST(Distributed, WeightsMatchCentralized) {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + static_cast<int>(g() % 8);
    const int m = k + static_cast<int>(g() % 30);
    const auto h = oracle::random_matrix(g, m, k);
    const auto tree = build_tree(m, 2);
    for (Mode mode : {Mode::CB, Mode::ZF, Mode::MMSE}) {
      const double reg = mode == Mode::MMSE ? 0.1 : 0;
      const auto dw = distributed_weights(h, tree, mode, reg);
      const auto ref = centralized_reference(h, mode, reg);
      if (mode == Mode::CB) {
        EXPECT_EQ(dw.W.data(), h.conj().data());
      } else {
        EXPECT_LT(oracle::rel_fro(oracle::to_eigen(dw.W), oracle::to_eigen(ref.W)), 1e-9);
      }
    }
  }
}

TEST(Distributed, ZeroForcingRecoversSymbols) {
  std::mt19937_64 g(14);
  const auto h = oracle::random_matrix(g, 15, 4);
  const auto tree = build_tree(15, 2);
  const auto w = distributed_weights(h, tree, Mode::ZF, 0);
  const auto q = oracle::random_vector(g, 4);
  const oracle::Vec y = oracle::to_eigen(h) * oracle::to_eigen(q);
  ComplexVector yv(y.data(), y.data() + y.size());
  const auto got = distributed_decode(w.W, yv, tree);
  EXPECT_LT((oracle::to_eigen(got) - oracle::to_eigen(q)).norm() / oracle::to_eigen(q).norm(), 1e-9);
}

TEST(Serialization, CsvRoundTrip) {
  std::mt19937_64 g(15);
  const auto m = oracle::random_matrix(g, 3, 4);
  std::stringstream s;
  write_csv(s, m);
  const auto back = read_csv(s);
  ASSERT_EQ(back.rows(), 3u);
  ASSERT_EQ(back.cols(), 4u);
  EXPECT_EQ(back.data(), m.data());
}
