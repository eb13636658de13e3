#pragma once

// Positivization protocols (an Rz layer plus an optional CZ layer), their
// action on sector vectors, the named protocols, reference states and the
// sign-structure metrics.

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "signpos/eigensolver.hpp"
#include "signpos/errors.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/rotation.hpp"
#include "signpos/state_vector.hpp"

namespace signpos {

using SitePair = std::pair<int, int>;

struct Protocol {
  int n_sites = 0;
  std::vector<Rotation> angles;
  std::vector<SitePair> cz_pairs;
  std::string label;

  void validate() const {
    if (static_cast<int>(angles.size()) != n_sites) {
      throw InvalidProtocol("protocol '" + label + "' has " + std::to_string(angles.size()) +
                            " angles for " + std::to_string(n_sites) + " sites");
    }
    for (auto a : angles) rotation_from_quarter_turns(quarter_turns(a));
    validate_pairs(n_sites, cz_pairs);
  }

  /// Non-identity rotations plus CZ gates.
  int gate_count() const {
    return static_cast<int>(std::count_if(angles.begin(), angles.end(),
                                          [](Rotation r) { return r != Rotation::identity; }) +
                            cz_pairs.size());
  }

  friend bool operator==(const Protocol& a, const Protocol& b) {
    return a.n_sites == b.n_sites && a.angles == b.angles && a.cz_pairs == b.cz_pairs;
  }
};

/// Per-configuration phase of the protocol's diagonal unitary:
/// prod_j exp(i s_j theta_j / 2) * (-1)^{#CZ pairs with both bits set},
/// with s_j = +1 for |1> and -1 for |0>, i.e. Rz(theta) = diag(e^{-i theta/2}, e^{i theta/2}).
inline std::vector<Complex> protocol_phases(const Protocol& p, const SectorBasis& basis) {
  p.validate();
  if (p.n_sites != basis.n_sites()) throw BasisMismatch("protocol and basis disagree on n_sites");
  int total = 0;
  std::vector<std::pair<Config, int>> rotated;
  for (int j = 0; j < p.n_sites; ++j) {
    const int q = quarter_turns(p.angles[static_cast<std::size_t>(j)]);
    total += q;
    if (q != 0) rotated.emplace_back(Config{1} << j, q);
  }
  std::vector<Config> cz;
  for (const auto& [a, b] : p.cz_pairs) cz.push_back((Config{1} << a) | (Config{1} << b));
  std::vector<Complex> phases(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Config c = basis[k];
    // sum_j s_j q_j = 2 * sum_{j set} q_j - sum_j q_j, in units of pi/4.
    int e = -total;
    for (const auto& [bit, q] : rotated) {
      if (c & bit) e += 2 * q;
    }
    Complex ph = eighth_root(e);
    int flips = 0;
    for (Config m : cz) flips += (c & m) == m;
    if (flips & 1) ph = -ph;
    phases[k] = ph;
  }
  return phases;
}

inline StateVector apply_protocol(const Protocol& p, const SectorBasis& basis, const StateVector& state) {
  require_basis(state, basis);
  const auto ph = protocol_phases(p, basis);
  StateVector out = state;
  for (Eigen::Index k = 0; k < out.amplitudes.size(); ++k) out.amplitudes[k] *= ph[static_cast<std::size_t>(k)];
  return out;
}

/// The parent Hamiltonian U H U^dagger of a protocol.
inline HamiltonianIR transform_hamiltonian(const HamiltonianIR& h, const Protocol& p) {
  p.validate();
  if (h.n_sites() != p.n_sites) throw InvalidProtocol("protocol and Hamiltonian sizes differ");
  HamiltonianIR out = conjugate_by_diagonal(h, p.angles);
  if (!p.cz_pairs.empty()) out = conjugate_by_cz(out, p.cz_pairs);
  return out;
}

/// Applies the adjoint of the protocol unitary.
inline StateVector apply_protocol_inverse(const Protocol& p, const SectorBasis& basis, const StateVector& state) {
  require_basis(state, basis);
  const auto ph = protocol_phases(p, basis);
  StateVector out = state;
  for (Eigen::Index k = 0; k < out.amplitudes.size(); ++k) {
    out.amplitudes[k] *= std::conj(ph[static_cast<std::size_t>(k)]);
  }
  return out;
}

struct SignReport {
  double sign_average = 0.0;
  double negative_fraction = 0.0;
  std::size_t n_negative = 0;
  std::size_t n_nonzero = 0;
  double phase_residual = 0.0;
  double negative_mass = 0.0;  // probability carried by negative amplitudes
  double positive_mass = 0.0;

  /// The report for -psi when the sign average is negative, so the result
  /// always has sign_average >= 0.
  SignReport oriented() const {
    if (sign_average >= 0.0) return *this;
    SignReport r = *this;
    r.sign_average = -sign_average;
    r.n_negative = n_nonzero - n_negative;
    r.negative_fraction = n_nonzero ? static_cast<double>(r.n_negative) / static_cast<double>(n_nonzero) : 0.0;
    std::swap(r.negative_mass, r.positive_mass);
    return r;
  }
};

inline constexpr double kRealTolerance = 1e-8;
inline constexpr double kZeroThreshold = 1e-12;  // relative to max |amplitude|

namespace detail {

inline SignReport sign_of_real(const Eigen::Ref<const Eigen::VectorXd>& x) {
  SignReport r;
  if (x.size() == 0) return r;
  const double cut = kZeroThreshold * x.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = x[i];
    if (std::abs(a) <= cut) continue;
    ++r.n_nonzero;
    if (a < 0) {
      ++r.n_negative;
      r.negative_mass += a * a;
    } else {
      r.positive_mass += a * a;
    }
  }
  r.sign_average = r.positive_mass - r.negative_mass;
  r.negative_fraction = r.n_nonzero ? static_cast<double>(r.n_negative) / static_cast<double>(r.n_nonzero) : 0.0;
  return r;
}

}  // namespace detail

/// <Sign> = sum_sigma sign(psi(sigma)) |psi(sigma)|^2 for a real (canonicalized)
/// state. Amplitudes at or below 1e-12 * max|psi| count as zero.
inline SignReport sign_average(const StateVector& state) {
  double resid = 0.0;
  for (Eigen::Index i = 0; i < state.amplitudes.size(); ++i) {
    resid = std::max(resid, std::abs(state.amplitudes[i].imag()));
  }
  if (resid > kRealTolerance) {
    throw NotRealError("sign average needs a real state; canonicalize first", resid);
  }
  SignReport r = detail::sign_of_real(state.amplitudes.real());
  r.phase_residual = resid;
  return r;
}

/// Canonicalizes (largest amplitude positive real) and measures.
inline SignReport measure_sign(const StateVector& state, double phase_tol = kRealTolerance) {
  const auto c = canonicalize_real(state, phase_tol);
  SignReport r = sign_average(c.state);
  r.phase_residual = c.max_imag_residual;
  return r;
}

/// |<a|b>|.
inline double overlap(const StateVector& a, const StateVector& b) {
  require_same_sector(a, b);
  return std::abs(a.amplitudes.dot(b.amplitudes));
}

// ---- named protocols -------------------------------------------------------

inline bool abba_b_site(int site, int alignment = 0) {
  const int p = ((site + alignment) % 4 + 4) % 4;
  return p == 1 || p == 2;
}

inline Protocol identity_protocol(int n_sites) {
  return {n_sites, std::vector<Rotation>(static_cast<std::size_t>(n_sites), Rotation::identity), {}, "raw"};
}

/// pi rotations on the odd sites (B sublattice of ABAB...).
inline Protocol mpr_protocol(int n_sites) {
  Protocol p = identity_protocol(n_sites);
  p.label = "mpr";
  for (int i = 1; i < n_sites; i += 2) p.angles[static_cast<std::size_t>(i)] = Rotation::pi;
  return p;
}

/// pi rotations on the B sites of the period-4 pattern A,B,B,A truncated at
/// n_sites. `alignment` shifts the pattern origin; 0 and 2 (and likewise 1
/// and 3) are complements of each other and give the same |<Sign>| in a
/// fixed-magnetization sector.
inline Protocol odd_even_protocol(int n_sites, int alignment = 0) {
  Protocol p = identity_protocol(n_sites);
  p.label = (n_sites / 2) % 2 ? "odd" : "even";
  if (alignment % 4 != 0) p.label += "@" + std::to_string(((alignment % 4) + 4) % 4);
  for (int i = 0; i < n_sites; ++i) {
    if (abba_b_site(i, alignment)) p.angles[static_cast<std::size_t>(i)] = Rotation::pi;
  }
  return p;
}

/// +pi/2 on the A sites and -pi/2 on the B sites of the ABBA pattern; defined
/// for even n_sites/2 only.
inline Protocol torlai_protocol(int n_sites) {
  if ((n_sites / 2) % 2 != 0) {
    throw UnsupportedParity("the +-pi/2 ABBA protocol needs n_sites/2 even, got n_sites = " +
                            std::to_string(n_sites));
  }
  Protocol p = identity_protocol(n_sites);
  p.label = "torlai";
  for (int i = 0; i < n_sites; ++i) {
    p.angles[static_cast<std::size_t>(i)] = abba_b_site(i) ? Rotation::minus_half_pi : Rotation::half_pi;
  }
  return p;
}

/// MPR rotations followed by CZ on (0,1), (2,3), ..., (N-2,N-1).
inline Protocol mpr_cz_protocol(int n_sites) {
  Protocol p = mpr_protocol(n_sites);
  p.label = "mpr-cz";
  for (int i = 0; i + 1 < n_sites; i += 2) p.cz_pairs.emplace_back(i, i + 1);
  return p;
}

/// Resolves a protocol name: raw, mpr, odd-even (also odd / even), torlai, mpr-cz.
inline Protocol protocol_by_name(const std::string& name, int n_sites) {
  if (name == "raw" || name == "identity") return identity_protocol(n_sites);
  if (name == "mpr") return mpr_protocol(n_sites);
  if (name == "odd-even" || name == "odd" || name == "even" || name == "abba") return odd_even_protocol(n_sites);
  if (name == "torlai") return torlai_protocol(n_sites);
  if (name == "mpr-cz") return mpr_cz_protocol(n_sites);
  throw InvalidArgument("unknown protocol '" + name + "'");
}

// ---- reference states ------------------------------------------------------

/// Product of singlets (|10> - |01>)/sqrt(2) on the pairs
/// (2k + offset, 2k + 1 + offset mod N), with the first site of each pair up
/// in the positive component.
inline StateVector mg_product_state(const SectorBasis& basis, int offset) {
  const int n = basis.n_sites();
  if (offset != 0 && offset != 1) throw InvalidArgument("singlet offset must be 0 or 1");
  if (n % 2 != 0 || basis.n_up() * 2 != n) {
    throw InvalidArgument("singlet products live in the Sz = 0 sector of an even chain");
  }
  StateVector s = StateVector::zeros(basis);
  const double amp = std::pow(2.0, -n / 4.0);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Config c = basis[k];
    int sign = 1;
    bool zero = false;
    for (int p = 0; p < n / 2; ++p) {
      const int a = (2 * p + offset) % n, b = (2 * p + 1 + offset) % n;
      const bool ua = (c >> a) & 1u, ub = (c >> b) & 1u;
      if (ua == ub) {
        zero = true;
        break;
      }
      if (!ua) sign = -sign;
    }
    if (!zero) s.amplitudes[static_cast<Eigen::Index>(k)] = sign * amp;
  }
  return s;
}

// ---- sign maximization inside a subspace ----------------------------------

namespace detail {

inline double sign_objective(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return (x.cwiseAbs().array() * x.array()).sum();
}

}  // namespace detail

struct SubspaceOptimum {
  Eigen::VectorXd coefficients;  // unit vector in the subspace frame
  Eigen::VectorXd vector;        // W * coefficients
  double sign_average = 0.0;
};

/// Real unit vector in span(W) (W: orthonormal columns) with the largest
/// <Sign>. Multi-start projected gradient ascent; deterministic for a seed.
inline SubspaceOptimum maximize_sign_in_subspace(const Eigen::MatrixXd& w, std::uint64_t seed = 1,
                                                 int random_starts = 8) {
  const Eigen::Index g = w.cols();
  if (g == 0) throw InvalidArgument("empty subspace");
  auto value = [&](const Eigen::VectorXd& c) { return detail::sign_objective(w * c); };
  std::vector<Eigen::VectorXd> starts;
  for (Eigen::Index j = 0; j < g; ++j) {
    starts.push_back(Eigen::VectorXd::Unit(g, j));
    starts.push_back(-Eigen::VectorXd::Unit(g, j));
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < random_starts && g > 1; ++s) {
    Eigen::VectorXd c(g);
    for (Eigen::Index j = 0; j < g; ++j) c[j] = detail::uniform_pm1(rng);
    starts.push_back(c.normalized());
  }
  SubspaceOptimum best;
  best.sign_average = -2.0;
  for (auto c : starts) {
    double f = value(c);
    double step = 1.0;
    for (int it = 0; it < 2000 && g > 1; ++it) {
      const Eigen::VectorXd x = w * c;
      const Eigen::VectorXd grad = w.transpose() * x.cwiseAbs();
      const Eigen::VectorXd r = grad - c.dot(grad) * c;
      if (r.norm() < 1e-14) break;
      bool moved = false;
      while (step > 1e-14) {
        const Eigen::VectorXd trial = (c + step * r).normalized();
        const double ft = value(trial);
        if (ft > f) {
          c = trial;
          f = ft;
          step *= 2.0;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (f > best.sign_average) best = {c, w * c, f};
  }
  return best;
}

/// Orthonormal real frame (dim x g) spanning a set of states that are each
/// real up to a global phase.
inline Eigen::MatrixXd real_frame(std::span<const StateVector> states, double phase_tol = kRealTolerance) {
  if (states.empty()) throw InvalidArgument("empty state set");
  const Eigen::Index dim = states.front().size();
  Eigen::MatrixXd w(dim, static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    require_same_sector(states.front(), states[j]);
    w.col(static_cast<Eigen::Index>(j)) = canonicalize_real(states[j], phase_tol).state.amplitudes.real();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, w.cols());
  if (w.cols() == 1 && q.col(0).dot(w.col(0)) < 0) q = -q;
  return q;
}

struct SubspaceSign {
  bool real = false;
  SignReport report;          // oriented, for the best vector in the subspace
  Eigen::VectorXd best_vector;
};

/// <Sign> of the protocol-transformed subspace spanned by `frame`. The
/// transformed subspace counts as real when the protocol phases, relative to
/// the phase on the largest row, are +-1 on its support (residual <=
/// phase_tol). A single vector is scored directly; larger subspaces report
/// the vector maximizing <Sign>.
inline SubspaceSign protocol_sign(const Protocol& p, const SectorBasis& basis, const Eigen::MatrixXd& frame,
                                  double phase_tol = kRealTolerance, std::uint64_t seed = 1) {
  if (static_cast<std::size_t>(frame.rows()) != basis.size()) throw BasisMismatch("frame and basis disagree");
  const auto phases = protocol_phases(p, basis);
  const Eigen::VectorXd rn = frame.rowwise().norm();
  const double max_rn = rn.maxCoeff();
  Eigen::Index pivot = 0;
  while (rn[pivot] < max_rn * (1.0 - 1e-10)) ++pivot;
  const Complex ref = std::conj(phases[static_cast<std::size_t>(pivot)]);
  SubspaceSign out;
  Eigen::MatrixXd t = frame;
  double resid = 0.0;
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    const Complex rel = phases[static_cast<std::size_t>(r)] * ref;
    resid = std::max(resid, rn[r] * std::abs(rel.imag()));
    if (rel.real() < 0) t.row(r) *= -1.0;
  }
  out.report.phase_residual = resid;
  if (resid > phase_tol) return out;
  out.real = true;
  if (t.cols() == 1) {
    out.best_vector = t.col(0);
  } else {
    out.best_vector = maximize_sign_in_subspace(t, seed).vector;
  }
  out.report = detail::sign_of_real(out.best_vector).oriented();
  out.report.phase_residual = resid;
  return out;
}

}  // namespace signpos

// ---- JSON: {"label": s, "angles_half_pi": [int], "cz_pairs": [[a, b]]} -------

namespace signpos {

inline void to_json(nlohmann::json& j, const Protocol& p) {
  std::vector<int> angles;
  for (auto a : p.angles) angles.push_back(quarter_turns(a));
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : p.cz_pairs) pairs.push_back({a, b});
  j = nlohmann::json{{"label", p.label}, {"angles_half_pi", angles}, {"cz_pairs", pairs}};
}

inline void from_json(const nlohmann::json& j, Protocol& p) {
  try {
    p.label = j.value("label", std::string{});
    p.angles.clear();
    for (int q : j.at("angles_half_pi").get<std::vector<int>>()) p.angles.push_back(rotation_from_quarter_turns(q));
    p.n_sites = static_cast<int>(p.angles.size());
    p.cz_pairs.clear();
    if (j.contains("cz_pairs")) {
      for (const auto& pr : j.at("cz_pairs")) {
        if (!pr.is_array() || pr.size() != 2) throw InvalidProtocol("cz_pairs entries must be [a, b]");
        p.cz_pairs.emplace_back(pr[0].get<int>(), pr[1].get<int>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidProtocol(std::string("malformed protocol JSON: ") + e.what());
  }
  p.validate();
}

}  // namespace signpos
