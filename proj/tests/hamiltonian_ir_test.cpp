#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "signpos/hamiltonian_ir.hpp"

using namespace signpos;

namespace {

double max_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

Eigen::MatrixXcd rz_layer(int n, std::span<const Rotation> angles) {
  std::vector<Eigen::MatrixXcd> ops;
  for (auto a : angles) ops.push_back(oracle::rz(quarter_turns(a) * M_PI / 2));
  return oracle::embed(n, ops);
}

}  // namespace

TEST(Heisenberg, TwoSiteSpectrum) {
  auto h = heisenberg_terms(build_chain(2, Boundary::open, 1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(oracle::full_matrix(h));
  Eigen::Vector4d expected(-0.75, 0.25, 0.25, 0.25);
  EXPECT_LT((es.eigenvalues() - expected).cwiseAbs().maxCoeff(), 1e-14);

  auto m = dense_matrix(h, enumerate_sector(2, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sec(m);
  EXPECT_NEAR(sec.eigenvalues()[0], -0.75, 1e-14);
  EXPECT_NEAR(sec.eigenvalues()[1], 0.25, 1e-14);
}

TEST(Heisenberg, TermCount) {
  auto h = heisenberg_terms(build_chain(8, Boundary::periodic, 1.0, 0.4));
  EXPECT_EQ(h.size(), 3u * 16u);
  EXPECT_TRUE(h.is_real());
  EXPECT_TRUE(is_hermitian(h));
}

TEST(Heisenberg, DenseMatchesKroneckerOracle) {
  for (auto b : {Boundary::open, Boundary::periodic}) {
    auto h = heisenberg_terms(build_chain(8, b, 1.0, 0.37));
    const auto full = oracle::full_matrix(h);
    for (int k : {3, 4, 5}) {
      auto basis = enumerate_sector(8, k);
      EXPECT_LT(max_diff(dense_matrix(h, basis), oracle::restrict_to(full, basis)), 1e-14);
    }
  }
}

TEST(Heisenberg, MatvecMatchesDense) {
  auto h = heisenberg_terms(build_chain(10, Boundary::periodic, 1.0, 0.6));
  auto basis = half_filling_sector(10);
  auto m = dense_matrix(h, basis);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  StateVector v = StateVector::zeros(basis);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.amplitudes[i] = Complex(g(rng), g(rng));
  auto hv = apply_terms(h, basis, v);
  EXPECT_LT((hv.amplitudes - m * v.amplitudes).cwiseAbs().maxCoeff(), 1e-12);
  auto threaded = apply_terms(h, basis, v, 4);
  EXPECT_LT((threaded.amplitudes - hv.amplitudes).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CompiledOperator, ThreadedMatchesSerialAboveChunkThreshold) {
  auto h = heisenberg_terms(build_chain(16, Boundary::open, 1.0, 0.5));
  auto basis = half_filling_sector(16);
  CompiledOperator op(h, basis);
  Eigen::VectorXcd v = Eigen::VectorXcd::LinSpaced(static_cast<Eigen::Index>(basis.size()), -1.0, 1.0);
  Eigen::VectorXcd a, b;
  op.apply(v, a, 1);
  op.apply(v, b, 3);
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HamiltonianIR, RejectsMalformedTerms) {
  EXPECT_THROW(HamiltonianIR(2, {{1.0, {}}}), InvalidArgument);
  EXPECT_THROW(HamiltonianIR(2, {{1.0, {{2, OpKind::Sz}}}}), InvalidArgument);
  EXPECT_THROW(HamiltonianIR(2, {{1.0, {{0, OpKind::Sz}, {0, OpKind::Sz}}}}), InvalidArgument);
  EXPECT_THROW(HamiltonianIR(2, {{Complex(NAN, 0), {{0, OpKind::Sz}}}}), InvalidArgument);
}

TEST(HamiltonianIR, SectorChangingTermIsRejected) {
  HamiltonianIR h(2, {{1.0, {{0, OpKind::Splus}}}});
  auto basis = enumerate_sector(2, 1);
  EXPECT_THROW(CompiledOperator(h, basis), ConsistencyError);
}

TEST(HamiltonianIR, DenseCapIsEnforced) {
  auto h = heisenberg_terms(build_chain(16, Boundary::open, 1.0, 0.0));
  EXPECT_THROW(dense_matrix(h, half_filling_sector(16)), TooLarge);
}

TEST(HamiltonianIR, NonHermitianDenseThrows) {
  HamiltonianIR h(2, {{Complex(0, 1), {{0, OpKind::Splus}, {1, OpKind::Sminus}}}});
  EXPECT_FALSE(is_hermitian(h));
  EXPECT_THROW(dense_matrix(h, enumerate_sector(2, 1)), ConsistencyError);
}

TEST(Normalize, MergesAndDropsCancellingTerms) {
  HamiltonianIR h(3, {{0.5, {{1, OpKind::Sz}, {0, OpKind::Sz}}},
                      {0.25, {{0, OpKind::Sz}, {1, OpKind::Sz}}},
                      {1.0, {{2, OpKind::Splus}, {0, OpKind::Sminus}}},
                      {-1.0, {{0, OpKind::Sminus}, {2, OpKind::Splus}}}});
  auto n = normalize(h);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_DOUBLE_EQ(n.terms()[0].coefficient.real(), 0.75);
  EXPECT_EQ(n.terms()[0].factors[0].site, 0);
}

TEST(DiagonalConjugation, MatchesKroneckerOracle) {
  const int n = 6;
  auto h = heisenberg_terms(build_chain(n, Boundary::periodic, 1.0, 0.45));
  const auto full = oracle::full_matrix(h);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Rotation> angles;
    for (int i = 0; i < n; ++i) angles.push_back(kAllRotations[rng() % 5]);
    auto hc = conjugate_by_diagonal(h, angles);
    EXPECT_TRUE(is_hermitian(hc));
    const auto u = rz_layer(n, angles);
    EXPECT_LT(max_diff(oracle::full_matrix(hc), u * full * u.adjoint()), 1e-13);
  }
}

TEST(DiagonalConjugation, PiRotationFlipsExchangeSign) {
  auto h = heisenberg_terms(build_chain(2, Boundary::open, 1.0, 0.0));
  std::vector<Rotation> a{Rotation::identity, Rotation::pi};
  auto hc = conjugate_by_diagonal(h, a);
  for (const auto& t : hc.terms()) {
    const bool exchange = t.factors[0].kind != OpKind::Sz;
    EXPECT_DOUBLE_EQ(t.coefficient.real(), exchange ? -0.5 : 1.0);
    EXPECT_DOUBLE_EQ(t.coefficient.imag(), 0.0);
  }
}

TEST(DiagonalConjugation, RejectsWrongLength) {
  auto h = heisenberg_terms(build_chain(4, Boundary::open, 1.0, 0.0));
  std::vector<Rotation> a(3, Rotation::pi);
  EXPECT_THROW(conjugate_by_diagonal(h, a), InvalidProtocol);
}

TEST(CzConjugation, TwoQubitOracle) {
  // Every single product of the form A_0 B_1 with A, B in {Sz, S+, S-}.
  const OpKind kinds[] = {OpKind::Sz, OpKind::Splus, OpKind::Sminus};
  const auto cz = oracle::cz(2, 0, 1);
  std::vector<std::pair<int, int>> pairs{{0, 1}};
  for (auto a : kinds) {
    for (auto b : kinds) {
      HamiltonianIR h(2, {{1.0, {{0, a}, {1, b}}}});
      auto hc = conjugate_by_cz(h, pairs);
      EXPECT_LT(max_diff(oracle::full_matrix(hc), cz * oracle::full_matrix(h) * cz), 1e-15)
          << to_string(a) << " " << to_string(b);
    }
  }
}

TEST(CzConjugation, MprPlusCzMatchesKroneckerOracle) {
  for (auto b : {Boundary::open, Boundary::periodic}) {
    const int n = 8;
    auto h = heisenberg_terms(build_chain(n, b, 1.0, 0.7));
    std::vector<Rotation> angles(n, Rotation::identity);
    for (int i = 1; i < n; i += 2) angles[static_cast<std::size_t>(i)] = Rotation::pi;
    std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}, {4, 5}, {6, 7}};
    auto hc = conjugate_by_cz(conjugate_by_diagonal(h, angles), pairs);
    EXPECT_TRUE(is_hermitian(hc));
    Eigen::MatrixXcd u = rz_layer(n, angles);
    for (const auto& [x, y] : pairs) u = oracle::cz(n, x, y) * u;
    EXPECT_LT(max_diff(oracle::full_matrix(hc), u * oracle::full_matrix(h) * u.adjoint()), 1e-13);
  }
}

TEST(CzConjugation, RandomPairsMatchOracle) {
  const int n = 6;
  auto h = heisenberg_terms(build_chain(n, Boundary::periodic, 1.0, 0.3));
  const auto full = oracle::full_matrix(h);
  for (auto pairs : std::vector<std::vector<std::pair<int, int>>>{{{0, 3}}, {{1, 2}, {5, 0}}, {{0, 2}, {1, 4}, {3, 5}}}) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1 << n, 1 << n);
    for (const auto& [x, y] : pairs) u = oracle::cz(n, x, y) * u;
    auto hc = conjugate_by_cz(h, pairs);
    EXPECT_LT(max_diff(oracle::full_matrix(hc), u * full * u.adjoint()), 1e-13);
  }
}

TEST(CzConjugation, RejectsBadPairs) {
  auto h = heisenberg_terms(build_chain(4, Boundary::open, 1.0, 0.0));
  std::vector<std::pair<int, int>> same{{1, 1}};
  std::vector<std::pair<int, int>> overlap{{0, 1}, {1, 2}};
  std::vector<std::pair<int, int>> out{{0, 4}};
  EXPECT_THROW(conjugate_by_cz(h, same), InvalidProtocol);
  EXPECT_THROW(conjugate_by_cz(h, overlap), InvalidProtocol);
  EXPECT_THROW(conjugate_by_cz(h, out), InvalidProtocol);
}

TEST(EvenOdd, EqualsAbbaPiConjugation) {
  for (int n : {6, 8, 10, 12}) {
    auto model = build_chain(n, Boundary::open, 1.0, 0.4);
    std::vector<Rotation> angles;
    for (int i = 0; i < n; ++i) angles.push_back(i % 4 == 1 || i % 4 == 2 ? Rotation::pi : Rotation::identity);
    auto direct = even_odd_transformed(model);
    auto via = conjugate_by_diagonal(heisenberg_terms(model), angles);
    EXPECT_EQ(to_listing(direct), to_listing(via)) << n;
  }
}

TEST(EvenOdd, FlippedBondCounts) {
  // J1 exchange flips on (2k, 2k+1); all J2 exchange flips.
  const int n = 10;
  auto h = even_odd_transformed(build_chain(n, Boundary::open, 1.0, 0.5));
  int j1_neg = 0, j1_pos = 0, j2_neg = 0;
  for (const auto& t : h.terms()) {
    if (t.factors[0].kind != OpKind::Splus) continue;
    const int d = std::abs(t.factors[1].site - t.factors[0].site);
    if (d == 1) (t.coefficient.real() < 0 ? j1_neg : j1_pos)++;
    else if (t.coefficient.real() < 0) ++j2_neg;
  }
  EXPECT_EQ(j1_neg, n / 2);
  EXPECT_EQ(j1_pos, n / 2 - 1);
  EXPECT_EQ(j2_neg, n - 2);
}

TEST(EvenOdd, PeriodicUnsupported) {
  EXPECT_THROW(even_odd_transformed(build_chain(8, Boundary::periodic, 1.0, 0.5)), UnsupportedBoundary);
}

TEST(Listing, GoldenTwoSite) {
  auto h = heisenberg_terms(build_chain(2, Boundary::open, 1.0, 0.0));
  EXPECT_EQ(to_listing(h),
            "1 0 0:Sz 1:Sz\n"
            "0.5 0 0:S+ 1:S-\n"
            "0.5 0 0:S- 1:S+\n");
}

TEST(Listing, ImaginaryAndNegativeZero) {
  HamiltonianIR h(2, {{Complex(-0.0, 0.25), {{0, OpKind::Splus}, {1, OpKind::PauliZ}}}});
  EXPECT_EQ(to_listing(h), "0 0.25 0:S+ 1:Z\n");
}
