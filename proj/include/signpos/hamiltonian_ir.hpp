#pragma once

// Term-list spin Hamiltonians over the operator alphabet {Sz, S+, S-, Z},
// matrix-free application on sector vectors, and exact symbolic conjugation
// by diagonal circuits (Rz layers and CZ layers).
//
// Single-site matrices in the (|0>, |1>) basis:
//   Sz = diag(-1/2, +1/2)    S+ = |1><0|    S- = |0><1|    Z = diag(+1, -1)
// so Z is the computational-basis Pauli Z and Z = -2 Sz.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "signpos/errors.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/rotation.hpp"
#include "signpos/state_vector.hpp"

namespace signpos {

enum class OpKind : std::uint8_t { Sz, Splus, Sminus, PauliZ };

inline const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::Sz: return "Sz";
    case OpKind::Splus: return "S+";
    case OpKind::Sminus: return "S-";
    case OpKind::PauliZ: return "Z";
  }
  return "?";
}

struct OperatorFactor {
  int site = 0;
  OpKind kind = OpKind::Sz;
  friend auto operator<=>(const OperatorFactor&, const OperatorFactor&) = default;
};

struct HamiltonianTerm {
  Complex coefficient;
  std::vector<OperatorFactor> factors;
};

inline constexpr double kMergeTolerance = 1e-14;

class HamiltonianIR {
 public:
  HamiltonianIR() = default;

  HamiltonianIR(int n_sites, std::vector<HamiltonianTerm> terms)
      : n_sites_(n_sites), terms_(std::move(terms)) {
    for (const auto& t : terms_) {
      if (t.factors.empty()) throw InvalidArgument("Hamiltonian term without factors");
      if (!std::isfinite(t.coefficient.real()) || !std::isfinite(t.coefficient.imag())) {
        throw InvalidArgument("non-finite Hamiltonian coefficient");
      }
      std::uint64_t seen = 0;
      for (const auto& f : t.factors) {
        if (f.site < 0 || f.site >= n_sites_) throw InvalidArgument("operator site out of range");
        const std::uint64_t bit = std::uint64_t{1} << f.site;
        if (seen & bit) throw InvalidArgument("two factors of one term act on the same site");
        seen |= bit;
      }
    }
  }

  int n_sites() const { return n_sites_; }
  const std::vector<HamiltonianTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  bool is_real() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const auto& t) { return t.coefficient.imag() == 0.0; });
  }

 private:
  int n_sites_ = 0;
  std::vector<HamiltonianTerm> terms_;
};

namespace detail {

inline std::vector<OperatorFactor> sorted_factors(std::vector<OperatorFactor> f) {
  std::sort(f.begin(), f.end());
  return f;
}

inline std::vector<OperatorFactor> adjoint_factors(const std::vector<OperatorFactor>& f) {
  std::vector<OperatorFactor> out = f;
  for (auto& x : out) {
    if (x.kind == OpKind::Splus) x.kind = OpKind::Sminus;
    else if (x.kind == OpKind::Sminus) x.kind = OpKind::Splus;
  }
  return out;
}

}  // namespace detail

/// Sorts factors by site, merges like terms, drops coefficients below 1e-14,
/// and orders terms canonically.
inline HamiltonianIR normalize(const HamiltonianIR& h) {
  std::map<std::vector<OperatorFactor>, Complex> merged;
  for (const auto& t : h.terms()) merged[detail::sorted_factors(t.factors)] += t.coefficient;
  std::vector<HamiltonianTerm> terms;
  for (auto& [factors, c] : merged) {
    Complex v = c;
    if (std::abs(v.real()) <= kMergeTolerance) v.real(0.0);
    if (std::abs(v.imag()) <= kMergeTolerance) v.imag(0.0);
    if (v == Complex{}) continue;
    terms.push_back({v, factors});
  }
  return HamiltonianIR(h.n_sites(), std::move(terms));
}

/// Largest mismatch between each term and the coefficient of its Hermitian
/// partner (0 for a Hermitian IR).
inline double hermiticity_defect(const HamiltonianIR& h) {
  const HamiltonianIR n = normalize(h);
  std::map<std::vector<OperatorFactor>, Complex> lookup;
  for (const auto& t : n.terms()) lookup[t.factors] = t.coefficient;
  double worst = 0.0;
  for (const auto& t : n.terms()) {
    auto adj = detail::sorted_factors(detail::adjoint_factors(t.factors));
    auto it = lookup.find(adj);
    const Complex partner = it == lookup.end() ? Complex{} : it->second;
    worst = std::max(worst, std::abs(std::conj(t.coefficient) - partner));
  }
  return worst;
}

inline bool is_hermitian(const HamiltonianIR& h, double tol = 1e-12) {
  return hermiticity_defect(h) <= tol;
}

/// J1-J2 Heisenberg chain: for each bond J [Sz Sz + (S+S- + S-S+)/2].
inline HamiltonianIR heisenberg_terms(const ChainModel& model) {
  std::vector<HamiltonianTerm> terms;
  auto add_bond = [&](const Bond& b, double j) {
    terms.push_back({j, {{b.i, OpKind::Sz}, {b.j, OpKind::Sz}}});
    terms.push_back({j / 2, {{b.i, OpKind::Splus}, {b.j, OpKind::Sminus}}});
    terms.push_back({j / 2, {{b.i, OpKind::Sminus}, {b.j, OpKind::Splus}}});
  };
  for (const auto& b : model.j1_bonds()) add_bond(b, model.j1());
  for (const auto& b : model.j2_bonds()) add_bond(b, model.j2());
  return HamiltonianIR(model.n_sites(), std::move(terms));
}

/// A term list lowered to bit masks for fast row-wise (gather) application.
///
/// Row r of H receives c * d(r) * v[r ^ flip] from every off-diagonal term
/// whose S+ sites are set and S- sites are clear in r; d(r) is the product of
/// the diagonal factor eigenvalues on r.
class CompiledOperator {
 public:
  CompiledOperator(const HamiltonianIR& h, const SectorBasis& basis) : basis_(&basis) {
    if (h.n_sites() != basis.n_sites()) throw BasisMismatch("IR and basis disagree on n_sites");
    diagonal_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
    std::vector<Lowered> diag_terms;
    for (const auto& t : h.terms()) {
      Lowered l{};
      l.coefficient = t.coefficient;
      int n_plus = 0, n_minus = 0, n_sz = 0;
      for (const auto& f : t.factors) {
        const Config bit = Config{1} << f.site;
        switch (f.kind) {
          case OpKind::Sz: l.sz_mask |= bit; ++n_sz; break;
          case OpKind::PauliZ: l.z_mask |= bit; break;
          case OpKind::Splus: l.flip |= bit; l.plus_mask |= bit; ++n_plus; break;
          case OpKind::Sminus: l.flip |= bit; ++n_minus; break;
        }
      }
      if (n_plus != n_minus) {
        throw ConsistencyError("term does not conserve total Sz; it would leave the sector");
      }
      l.coefficient *= std::ldexp(1.0, -n_sz);
      (l.flip == 0 ? diag_terms : offdiag_).push_back(l);
    }
    const auto& configs = basis.configs();
    for (std::size_t r = 0; r < configs.size(); ++r) {
      Complex acc{};
      for (const auto& l : diag_terms) acc += l.coefficient * l.diagonal_sign(configs[r]);
      diagonal_[static_cast<Eigen::Index>(r)] = acc;
    }
  }

  std::size_t dimension() const { return basis_->size(); }
  const SectorBasis& basis() const { return *basis_; }

  /// Calls fn(column, value) for every nonzero entry of row `r`.
  template <typename Fn>
  void for_each_in_row(std::size_t r, Fn&& fn) const {
    const Config c = basis_->configs()[r];
    const Complex d = diagonal_[static_cast<Eigen::Index>(r)];
    if (d != Complex{}) fn(r, d);
    for (const auto& l : offdiag_) {
      if ((c & l.flip) != l.plus_mask) continue;
      const auto col = basis_->index_of(c ^ l.flip);
      if (!col) throw ConsistencyError("matvec mapped a configuration out of the sector");
      fn(*col, l.coefficient * l.diagonal_sign(c));
    }
  }

  void apply(const Eigen::VectorXcd& in, Eigen::VectorXcd& out, int threads = 1) const {
    const auto dim = static_cast<Eigen::Index>(dimension());
    if (in.size() != dim) throw BasisMismatch("vector length does not match the operator");
    out.resize(dim);
    auto rows = [&](Eigen::Index begin, Eigen::Index end) {
      for (Eigen::Index r = begin; r < end; ++r) {
        Complex acc{};
        for_each_in_row(static_cast<std::size_t>(r),
                        [&](std::size_t col, Complex v) { acc += v * in[static_cast<Eigen::Index>(col)]; });
        out[r] = acc;
      }
    };
    if (threads <= 1 || dim < 4096) {
      rows(0, dim);
      return;
    }
    std::vector<std::jthread> pool;
    const Eigen::Index chunk = (dim + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const Eigen::Index b = t * chunk, e = std::min(dim, b + chunk);
      if (b < e) pool.emplace_back(rows, b, e);
    }
  }

 private:
  struct Lowered {
    Complex coefficient;
    Config flip = 0;
    Config plus_mask = 0;
    Config sz_mask = 0;
    Config z_mask = 0;

    // Sz contributes -1 on |0>, Z contributes -1 on |1>; the 1/2 factors of
    // Sz are folded into the coefficient.
    double diagonal_sign(Config c) const {
      const int flips = std::popcount(static_cast<Config>(~c & sz_mask)) + std::popcount(c & z_mask);
      return (flips & 1) ? -1.0 : 1.0;
    }
  };

  const SectorBasis* basis_;
  Eigen::VectorXcd diagonal_;
  std::vector<Lowered> offdiag_;
};

/// H|state>. Output stays in the input sector.
inline StateVector apply_terms(const HamiltonianIR& h, const SectorBasis& basis,
                               const StateVector& state, int threads = 1) {
  require_basis(state, basis);
  CompiledOperator op(h, basis);
  StateVector out = StateVector::zeros(basis);
  op.apply(state.amplitudes, out.amplitudes, threads);
  return out;
}

inline constexpr std::size_t kDenseCap = 5000;

/// Dense sector-restricted matrix. Throws TooLarge above 5000 states and
/// ConsistencyError when the result is not Hermitian to 1e-12.
inline Eigen::MatrixXcd dense_matrix(const HamiltonianIR& h, const SectorBasis& basis) {
  if (basis.size() > kDenseCap) {
    throw TooLarge("dense matrix requested for sector dimension " + std::to_string(basis.size()) +
                   " (cap " + std::to_string(kDenseCap) + ")");
  }
  CompiledOperator op(h, basis);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    op.for_each_in_row(static_cast<std::size_t>(r), [&](std::size_t c, Complex v) {
      m(r, static_cast<Eigen::Index>(c)) += v;
    });
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (dim > 0 && (m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConsistencyError("dense matrix is not Hermitian");
  }
  return m;
}

namespace detail {

using Mat2 = std::array<Complex, 4>;  // row-major (00, 01, 10, 11)

inline Mat2 matrix_of(OpKind k) {
  switch (k) {
    case OpKind::Sz: return {Complex{-0.5}, 0.0, 0.0, Complex{0.5}};
    case OpKind::Splus: return {0.0, 0.0, Complex{1.0}, 0.0};
    case OpKind::Sminus: return {0.0, Complex{1.0}, 0.0, 0.0};
    case OpKind::PauliZ: return {Complex{1.0}, 0.0, 0.0, Complex{-1.0}};
  }
  return {};
}

inline Mat2 mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

struct SiteOption {
  Complex scale;
  std::optional<OpKind> kind;  // nullopt is the identity
};

// Expands a single-site product back onto {I, Sz, S+, S-, Z}. A traceless
// diagonal is written as Z when a Z factor took part in the product, as Sz
// otherwise.
inline std::vector<SiteOption> decompose(const Mat2& m, bool prefer_z) {
  std::vector<SiteOption> out;
  const Complex id = (m[0] + m[3]) / 2.0;
  const Complex sz = m[3] - m[0];
  if (std::abs(id) > 0.0) out.push_back({id, std::nullopt});
  if (std::abs(sz) > 0.0) {
    if (prefer_z) out.push_back({-sz / 2.0, OpKind::PauliZ});
    else out.push_back({sz, OpKind::Sz});
  }
  if (std::abs(m[2]) > 0.0) out.push_back({m[2], OpKind::Splus});
  if (std::abs(m[1]) > 0.0) out.push_back({m[1], OpKind::Sminus});
  return out;
}

}  // namespace detail

/// U H U^dagger for U = prod_i Rz(theta_i): S+_i picks up e^{i theta_i},
/// S-_i picks up e^{-i theta_i}, diagonal factors are untouched.
inline HamiltonianIR conjugate_by_diagonal(const HamiltonianIR& h, std::span<const Rotation> angles) {
  if (static_cast<int>(angles.size()) != h.n_sites()) {
    throw InvalidProtocol("need one rotation per site");
  }
  std::vector<HamiltonianTerm> terms;
  terms.reserve(h.size());
  for (const auto& t : h.terms()) {
    int q = 0;
    for (const auto& f : t.factors) {
      const int a = quarter_turns(angles[static_cast<std::size_t>(f.site)]);
      if (f.kind == OpKind::Splus) q += a;
      else if (f.kind == OpKind::Sminus) q -= a;
    }
    terms.push_back({t.coefficient * i_pow(q), t.factors});
  }
  HamiltonianIR out = normalize(HamiltonianIR(h.n_sites(), std::move(terms)));
  if (is_hermitian(h) && !is_hermitian(out)) {
    throw ConsistencyError("diagonal conjugation produced a non-Hermitian IR");
  }
  return out;
}

inline void validate_pairs(int n_sites, std::span<const std::pair<int, int>> pairs) {
  std::uint64_t used = 0;
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= n_sites || b >= n_sites || a == b) {
      throw InvalidProtocol("CZ pair (" + std::to_string(a) + "," + std::to_string(b) +
                            ") is out of range or degenerate");
    }
    const std::uint64_t m = (std::uint64_t{1} << a) | (std::uint64_t{1} << b);
    if (used & m) throw InvalidProtocol("CZ pairs overlap");
    used |= m;
  }
}

/// U H U^dagger for U = prod CZ(a,b): S+-_a -> S+-_a Z_b and S+-_b -> S+-_b Z_a.
inline HamiltonianIR conjugate_by_cz(const HamiltonianIR& h, std::span<const std::pair<int, int>> pairs) {
  validate_pairs(h.n_sites(), pairs);
  std::vector<int> partner(static_cast<std::size_t>(h.n_sites()), -1);
  for (const auto& [a, b] : pairs) {
    partner[static_cast<std::size_t>(a)] = b;
    partner[static_cast<std::size_t>(b)] = a;
  }
  std::vector<HamiltonianTerm> terms;
  for (const auto& t : h.terms()) {
    // Ordered operator string after conjugating each factor in place.
    std::vector<std::pair<int, OpKind>> string;
    for (const auto& f : t.factors) {
      string.emplace_back(f.site, f.kind);
      const bool flips = f.kind == OpKind::Splus || f.kind == OpKind::Sminus;
      if (flips && partner[static_cast<std::size_t>(f.site)] >= 0) {
        string.emplace_back(partner[static_cast<std::size_t>(f.site)], OpKind::PauliZ);
      }
    }
    // Factors on different sites commute, so group per site keeping order.
    std::map<int, std::pair<detail::Mat2, bool>> per_site;
    for (const auto& [site, kind] : string) {
      auto it = per_site.find(site);
      if (it == per_site.end()) {
        per_site.emplace(site, std::make_pair(detail::matrix_of(kind), kind == OpKind::PauliZ));
      } else {
        it->second.first = detail::mul(it->second.first, detail::matrix_of(kind));
        it->second.second = it->second.second || kind == OpKind::PauliZ;
      }
    }
    std::vector<HamiltonianTerm> partial{{t.coefficient, {}}};
    for (const auto& [site, entry] : per_site) {
      const auto options = detail::decompose(entry.first, entry.second);
      std::vector<HamiltonianTerm> next;
      for (const auto& p : partial) {
        for (const auto& o : options) {
          HamiltonianTerm nt{p.coefficient * o.scale, p.factors};
          if (o.kind) nt.factors.push_back({site, *o.kind});
          next.push_back(std::move(nt));
        }
      }
      partial = std::move(next);
    }
    for (auto& p : partial) {
      // S+- factors survive multiplication by Z, so a term never collapses
      // to a pure constant.
      if (p.factors.empty()) throw ConsistencyError("term collapsed to identity");
      terms.push_back(std::move(p));
    }
  }
  HamiltonianIR out = normalize(HamiltonianIR(h.n_sites(), std::move(terms)));
  if (is_hermitian(h) && !is_hermitian(out)) {
    throw ConsistencyError("CZ conjugation produced a non-Hermitian IR");
  }
  return out;
}

/// Open-chain Hamiltonian after pi rotations on the B sites of the ABBA
/// partition: every J2 exchange term and the J1 exchange on (2k, 2k+1) bonds
/// change sign; Sz Sz terms and the (2k+1, 2k+2) exchange are unchanged.
inline HamiltonianIR even_odd_transformed(const ChainModel& model) {
  if (model.boundary() != Boundary::open) {
    throw UnsupportedBoundary("the ABBA-transformed Hamiltonian is constructed for open chains only");
  }
  std::vector<HamiltonianTerm> terms;
  auto add = [&](const Bond& b, double j, double exchange_sign) {
    terms.push_back({j, {{b.i, OpKind::Sz}, {b.j, OpKind::Sz}}});
    terms.push_back({exchange_sign * j / 2, {{b.i, OpKind::Splus}, {b.j, OpKind::Sminus}}});
    terms.push_back({exchange_sign * j / 2, {{b.i, OpKind::Sminus}, {b.j, OpKind::Splus}}});
  };
  for (const auto& b : model.j1_bonds()) add(b, model.j1(), b.i % 2 == 0 ? -1.0 : 1.0);
  for (const auto& b : model.j2_bonds()) add(b, model.j2(), -1.0);
  return normalize(HamiltonianIR(model.n_sites(), std::move(terms)));
}

namespace detail {

inline std::string format_real(double x) {
  if (x == 0.0) x = 0.0;  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

}  // namespace detail

/// Deterministic listing, one term per line:
///   coefficient_re coefficient_im site:kind site:kind ...
inline std::string to_listing(const HamiltonianIR& h) {
  const HamiltonianIR n = normalize(h);
  std::ostringstream os;
  for (const auto& t : n.terms()) {
    os << detail::format_real(t.coefficient.real()) << ' ' << detail::format_real(t.coefficient.imag());
    for (const auto& f : t.factors) os << ' ' << f.site << ':' << to_string(f.kind);
    os << '\n';
  }
  return os.str();
}

}  // namespace signpos
