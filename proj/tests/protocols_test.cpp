#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "signpos/analysis.hpp"
#include "signpos/protocols.hpp"

using namespace signpos;

namespace {

StateVector random_real_state(const SectorBasis& basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  StateVector s = StateVector::zeros(basis);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.amplitudes[i] = g(rng);
  s.amplitudes.normalize();
  return s;
}

std::vector<int> quarter(const Protocol& p) {
  std::vector<int> q;
  for (auto a : p.angles) q.push_back(quarter_turns(a));
  return q;
}

Eigen::MatrixXcd protocol_unitary(const Protocol& p) {
  std::vector<Eigen::MatrixXcd> ops;
  for (auto a : p.angles) ops.push_back(oracle::rz(quarter_turns(a) * M_PI / 2));
  Eigen::MatrixXcd u = oracle::embed(p.n_sites, ops);
  for (const auto& [a, b] : p.cz_pairs) u = oracle::cz(p.n_sites, a, b) * u;
  return u;
}

}  // namespace

TEST(NamedProtocols, Angles) {
  EXPECT_EQ(quarter(mpr_protocol(6)), (std::vector<int>{0, 2, 0, 2, 0, 2}));
  EXPECT_EQ(quarter(mpr_protocol(4)), (std::vector<int>{0, 2, 0, 2}));
  EXPECT_EQ(quarter(odd_even_protocol(8)), (std::vector<int>{0, 2, 2, 0, 0, 2, 2, 0}));
  EXPECT_EQ(quarter(odd_even_protocol(6)), (std::vector<int>{0, 2, 2, 0, 0, 2}));
  EXPECT_EQ(quarter(odd_even_protocol(4)), (std::vector<int>{0, 2, 2, 0}));
  EXPECT_EQ(quarter(torlai_protocol(8)), (std::vector<int>{1, -1, -1, 1, 1, -1, -1, 1}));
  EXPECT_THROW(torlai_protocol(6), UnsupportedParity);
  EXPECT_EQ(odd_even_protocol(6).label, "odd");
  EXPECT_EQ(odd_even_protocol(8).label, "even");
  const auto cz = mpr_cz_protocol(6);
  EXPECT_EQ(quarter(cz), quarter(mpr_protocol(6)));
  EXPECT_EQ(cz.cz_pairs, (std::vector<SitePair>{{0, 1}, {2, 3}, {4, 5}}));
  EXPECT_EQ(mpr_cz_protocol(4).cz_pairs, (std::vector<SitePair>{{0, 1}, {2, 3}}));
  EXPECT_EQ(cz.gate_count(), 6);
}

TEST(NamedProtocols, ByName) {
  EXPECT_EQ(protocol_by_name("mpr", 6), mpr_protocol(6));
  EXPECT_EQ(protocol_by_name("odd-even", 6), odd_even_protocol(6));
  EXPECT_EQ(protocol_by_name("mpr-cz", 6), mpr_cz_protocol(6));
  EXPECT_THROW(protocol_by_name("nope", 6), InvalidArgument);
}

TEST(ApplyProtocol, IdentityLeavesStateUnchanged) {
  auto basis = half_filling_sector(8);
  auto s = random_real_state(basis, 1);
  auto t = apply_protocol(identity_protocol(8), basis, s);
  EXPECT_EQ((t.amplitudes - s.amplitudes).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ApplyProtocol, SingletBecomesTriplet) {
  auto basis = enumerate_sector(2, 1);  // configs 01 (site 0 up), 10 (site 1 up)
  StateVector s = StateVector::zeros(basis);
  s.amplitudes << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
  Protocol p{2, {Rotation::identity, Rotation::pi}, {}, "t"};
  auto c = canonicalize_real(apply_protocol(p, basis, s));
  EXPECT_NEAR(c.state.amplitudes[0].real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c.state.amplitudes[1].real(), 1 / std::sqrt(2.0), 1e-15);
}

TEST(ApplyProtocol, CzFlipsDoublyOccupiedPair) {
  auto basis = enumerate_sector(2, 2);
  StateVector s = StateVector::zeros(basis);
  s.amplitudes << 0.5;
  Protocol p = identity_protocol(2);
  p.cz_pairs = {{0, 1}};
  EXPECT_EQ(apply_protocol(p, basis, s).amplitudes[0], Complex(-0.5, 0.0));
}

TEST(ApplyProtocol, MatchesKroneckerUnitary) {
  const int n = 6;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Protocol p = identity_protocol(n);
    for (auto& a : p.angles) a = kAllRotations[rng() % 5];
    if (trial % 2) p.cz_pairs = {{0, 3}, {4, 1}};
    const auto u = protocol_unitary(p);
    for (int k : {2, 3}) {
      auto basis = enumerate_sector(n, k);
      auto s = random_real_state(basis, static_cast<std::uint64_t>(trial));
      Eigen::VectorXcd full = Eigen::VectorXcd::Zero(1 << n);
      for (std::size_t i = 0; i < basis.size(); ++i) full[basis[i]] = s.amplitudes[static_cast<Eigen::Index>(i)];
      const Eigen::VectorXcd expect = u * full;
      auto t = apply_protocol(p, basis, s);
      for (std::size_t i = 0; i < basis.size(); ++i) {
        EXPECT_LT(std::abs(t.amplitudes[static_cast<Eigen::Index>(i)] - expect[basis[i]]), 1e-14);
      }
    }
  }
}

TEST(ApplyProtocol, MprCzUnitaryIsRzLayerTimesCzLayer) {
  // Dense form: prod_i [I (x) Rz(pi)] on each pair, then CZ on the pair.
  const int n = 6;
  const auto p = mpr_cz_protocol(n);
  Eigen::MatrixXcd pair = oracle::cz(2, 0, 1) * oracle::embed(2, {Eigen::MatrixXcd::Identity(2, 2), oracle::rz(M_PI)});
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = 0; k < n / 2; ++k) {
    Eigen::MatrixXcd next(expect.rows() * 4, expect.cols() * 4);
    for (Eigen::Index a = 0; a < 4; ++a)
      for (Eigen::Index b = 0; b < 4; ++b) next.block(a * expect.rows(), b * expect.cols(), expect.rows(), expect.cols()) = pair(a, b) * expect;
    expect = next;
  }
  EXPECT_LT((protocol_unitary(p) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ApplyProtocol, NormPreservedAndInverse) {
  auto basis = half_filling_sector(10);
  auto s = random_real_state(basis, 9);
  for (const auto& p : {mpr_protocol(10), odd_even_protocol(10), mpr_cz_protocol(10), protocol_by_name("odd", 10)}) {
    auto t = apply_protocol(p, basis, s);
    EXPECT_NEAR(t.norm(), s.norm(), 1e-15);
    auto back = apply_protocol_inverse(p, basis, t);
    EXPECT_LT((back.amplitudes - s.amplitudes).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ApplyProtocol, PiProtocolsAreInvolutionsUpToSectorPhase) {
  auto basis = half_filling_sector(8);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Protocol p = identity_protocol(8);
    for (auto& a : p.angles) a = std::array{Rotation::identity, Rotation::pi, Rotation::minus_pi}[rng() % 3];
    const auto ph = protocol_phases(p, basis);
    const Complex first = ph[0] * ph[0];
    for (const auto& x : ph) EXPECT_LT(std::abs(x * x - first), 1e-15);
  }
}

TEST(ApplyProtocol, BasisMismatchThrows) {
  auto basis = half_filling_sector(6);
  StateVector s = StateVector::zeros(enumerate_sector(6, 2));
  EXPECT_THROW(apply_protocol(mpr_protocol(6), basis, s), BasisMismatch);
  EXPECT_THROW(apply_protocol(mpr_protocol(8), basis, StateVector::zeros(basis)), BasisMismatch);
}

TEST(SignAverage, AllPositive) {
  auto basis = half_filling_sector(6);
  StateVector s = StateVector::zeros(basis);
  s.amplitudes.setConstant(1.0 / std::sqrt(20.0));
  auto r = sign_average(s);
  EXPECT_NEAR(r.sign_average, 1.0, 1e-15);
  EXPECT_EQ(r.negative_fraction, 0.0);
  EXPECT_EQ(r.n_nonzero, 20u);
}

TEST(SignAverage, EquationConsistencyAndBounds) {
  auto basis = half_filling_sector(10);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = random_real_state(basis, seed);
    auto r = sign_average(s);
    EXPECT_GE(r.sign_average, -1.0);
    EXPECT_LE(r.sign_average, 1.0);
    EXPECT_NEAR(r.sign_average + 2 * r.negative_mass, 1.0, 1e-12);
    EXPECT_LE(r.n_negative, r.n_nonzero);
    EXPECT_DOUBLE_EQ(r.negative_fraction, static_cast<double>(r.n_negative) / static_cast<double>(r.n_nonzero));
    auto o = r.oriented();
    EXPECT_NEAR(o.sign_average, std::abs(r.sign_average), 1e-15);
    EXPECT_NEAR(o.sign_average + 2 * o.negative_mass, 1.0, 1e-12);
  }
}

TEST(SignAverage, TinyAmplitudesAreIgnored) {
  auto basis = enumerate_sector(4, 2);
  StateVector s = StateVector::zeros(basis);
  s.amplitudes << 1.0, -1e-14, 0.0, 0.0, 0.0, 0.0;
  auto r = sign_average(s);
  EXPECT_EQ(r.n_nonzero, 1u);
  EXPECT_EQ(r.n_negative, 0u);
}

TEST(SignAverage, ComplexStateThrows) {
  auto basis = enumerate_sector(2, 1);
  StateVector s = StateVector::zeros(basis);
  s.amplitudes << Complex(0.6, 0), Complex(0, 0.8);
  EXPECT_THROW(sign_average(s), NotRealError);
}

TEST(SignAverage, RawGroundStateNearZeroDeepInFrustratedRegime) {
  auto level = solve_ground_level(build_chain(10, Boundary::periodic, 1.0, 1.0));
  ASSERT_EQ(level.degeneracy(), 1u);
  EXPECT_LE(std::abs(measure_sign(level.vectors[0]).sign_average), 0.05);
}

TEST(SignAverage, MprPlateauTenSitesOpen) {
  auto level = solve_ground_level(build_chain(10, Boundary::open, 1.0, 0.3));
  auto basis = half_filling_sector(10);
  auto r = measure_sign(apply_protocol(mpr_protocol(10), basis, level.vectors[0])).oriented();
  EXPECT_GE(r.sign_average, 0.99);
}

TEST(SignAverage, MprInvariantUnderSublatticeExchange) {
  auto level = solve_ground_level(build_chain(8, Boundary::open, 1.0, 0.7));
  auto basis = half_filling_sector(8);
  Protocol swapped = identity_protocol(8);
  for (int i = 0; i < 8; i += 2) swapped.angles[static_cast<std::size_t>(i)] = Rotation::pi;
  const double a = std::abs(measure_sign(apply_protocol(mpr_protocol(8), basis, level.vectors[0])).sign_average);
  const double b = std::abs(measure_sign(apply_protocol(swapped, basis, level.vectors[0])).sign_average);
  EXPECT_NEAR(a, b, 1e-14);
}

TEST(SignAverage, TorlaiMatchesEvenProtocol) {
  auto level = solve_ground_level(build_chain(8, Boundary::periodic, 1.0, 2.0));
  ASSERT_EQ(level.degeneracy(), 1u);
  auto basis = half_filling_sector(8);
  const double t = measure_sign(apply_protocol(torlai_protocol(8), basis, level.vectors[0])).oriented().sign_average;
  const double e = measure_sign(apply_protocol(odd_even_protocol(8), basis, level.vectors[0])).oriented().sign_average;
  EXPECT_NEAR(t, e, 1e-6);
}

TEST(SignAverage, OddEvenTruncationsAgree) {
  // Reversing the truncated ABBA pattern gives the complementary B set.
  for (int n : {6, 10}) {
    auto level = solve_ground_level(build_chain(n, Boundary::periodic, 1.0, 1.2));
    auto basis = half_filling_sector(n);
    Protocol reversed = identity_protocol(n);
    for (int i = 0; i < n; ++i) {
      if (abba_b_site(n - 1 - i)) reversed.angles[static_cast<std::size_t>(i)] = Rotation::pi;
    }
    const double a = measure_sign(apply_protocol(odd_even_protocol(n), basis, level.vectors[0])).oriented().sign_average;
    const double b = measure_sign(apply_protocol(reversed, basis, level.vectors[0])).oriented().sign_average;
    EXPECT_NEAR(a, b, 1e-12) << n;
  }
}

TEST(MgState, FourSites) {
  auto basis = enumerate_sector(4, 2);
  auto s = mg_product_state(basis, 0);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (std::abs(s.amplitudes[i]) > 0) {
      ++nonzero;
      EXPECT_NEAR(std::abs(s.amplitudes[i]), 0.5, 1e-15);
    }
  }
  EXPECT_EQ(nonzero, 4);
  EXPECT_NEAR(s.norm(), 1.0, 1e-15);
}

TEST(MgState, ExactGroundStateOpenChains) {
  for (int n : {6, 8, 10}) {
    auto level = solve_ground_level(build_chain(n, Boundary::open, 1.0, 0.5));
    ASSERT_EQ(level.degeneracy(), 1u);
    auto basis = half_filling_sector(n);
    EXPECT_NEAR(overlap(mg_product_state(basis, 0), level.vectors[0]), 1.0, 1e-8) << n;
  }
}

TEST(MgState, MprMakesItNonnegative) {
  auto basis = half_filling_sector(8);
  for (int offset : {0, 1}) {
    auto c = canonicalize_real(apply_protocol(mpr_protocol(8), basis, mg_product_state(basis, offset)));
    EXPECT_GE(c.state.amplitudes.real().minCoeff(), -1e-15);
  }
}

TEST(MgState, ArgumentChecks) {
  EXPECT_THROW(mg_product_state(enumerate_sector(6, 2), 0), InvalidArgument);
  EXPECT_THROW(mg_product_state(half_filling_sector(6), 2), InvalidArgument);
}

TEST(Overlap, Basics) {
  auto basis = half_filling_sector(6);
  auto a = random_real_state(basis, 1);
  EXPECT_NEAR(overlap(a, a), 1.0, 1e-14);
  StateVector e0 = StateVector::zeros(basis), e1 = StateVector::zeros(basis);
  e0.amplitudes[0] = 1.0;
  e1.amplitudes[1] = 1.0;
  EXPECT_EQ(overlap(e0, e1), 0.0);
  EXPECT_THROW(overlap(a, StateVector::zeros(enumerate_sector(6, 2))), BasisMismatch);
}

TEST(SubspaceMaximum, FindsPositiveCombination) {
  // span{(1,1,0,0), (1,-1,0,0)}/sqrt2 contains (1,0,0,0).
  Eigen::MatrixXd w(4, 2);
  w << 1, 1, 1, -1, 0, 0, 0, 0;
  w /= std::sqrt(2.0);
  EXPECT_NEAR(maximize_sign_in_subspace(w).sign_average, 1.0, 1e-10);
}

TEST(SubspaceMaximum, NeverBelowBasisVectors) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd m(30, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd w = qr.householderQ() * Eigen::MatrixXd::Identity(30, 3);
    const double best = maximize_sign_in_subspace(w, 3).sign_average;
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_GE(best + 1e-12, std::abs(detail::sign_objective(w.col(j))));
  }
}

TEST(ProtocolJson, RoundTrip) {
  Protocol p = mpr_cz_protocol(6);
  p.angles[0] = Rotation::minus_half_pi;
  nlohmann::json j = p;
  EXPECT_EQ(j.at("angles_half_pi"), nlohmann::json({-1, 2, 0, 2, 0, 2}));
  EXPECT_EQ(j.at("cz_pairs"), nlohmann::json({{0, 1}, {2, 3}, {4, 5}}));
  EXPECT_EQ(j.at("label"), "mpr-cz");
  Protocol back = j.get<Protocol>();
  EXPECT_EQ(back, p);
  EXPECT_EQ(back.label, p.label);
}

TEST(ProtocolJson, RejectsInvalid) {
  auto parse = [](const char* s) { return nlohmann::json::parse(s).get<Protocol>(); };
  EXPECT_THROW(parse(R"({"label":"x","angles_half_pi":[0,3]})"), InvalidProtocol);
  EXPECT_THROW(parse(R"({"label":"x","angles_half_pi":[0,1],"cz_pairs":[[0,2]]})"), InvalidProtocol);
  EXPECT_THROW(parse(R"({"label":"x","angles_half_pi":[0,1,0,0],"cz_pairs":[[0,1],[1,2]]})"), InvalidProtocol);
  EXPECT_THROW(parse(R"({"label":"x"})"), InvalidProtocol);
  EXPECT_NO_THROW(parse(R"({"angles_half_pi":[0,2,0,2]})"));
}
