#pragma once

// Lowest eigenpairs of sector-restricted Hamiltonians.
//
// Small sectors go through a dense Eigen solve. Larger ones use a
// thick-restart Lanczos iteration with full reorthogonalization that locks one
// converged eigenpair at a time and restarts from a fresh random component, so
// exactly degenerate levels are resolved vector by vector.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signpos/errors.hpp"
#include "signpos/hamiltonian_ir.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/state_vector.hpp"

namespace signpos {

struct SolverOptions {
  int k = 1;
  double tol = 1e-10;
  int max_iterations = 20000;  // matrix-vector products
  std::uint64_t seed = 1;
  std::size_t dense_threshold = 1000;
  int krylov_dim = 60;
  double group_tol = 1e-9;
  int threads = 1;
};

struct EigenResult {
  std::vector<double> eigenvalues;
  std::vector<StateVector> eigenvectors;
  std::vector<double> residual_norms;
  std::vector<std::vector<std::size_t>> degeneracy_groups;

  /// Indices of the lowest level.
  const std::vector<std::size_t>& ground_group() const { return degeneracy_groups.front(); }
  std::size_t ground_degeneracy() const { return degeneracy_groups.front().size(); }
};

/// Maximal runs of consecutive eigenvalues whose gaps are below
/// group_tol * max(1, |lambda|).
inline std::vector<std::vector<std::size_t>> degeneracy_groups(std::span<const double> eigenvalues,
                                                               double group_tol) {
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (i > 0) {
      const double gap = eigenvalues[i] - eigenvalues[i - 1];
      const double scale = std::max(1.0, std::abs(eigenvalues[i]));
      if (gap < group_tol * scale) {
        groups.back().push_back(i);
        continue;
      }
    }
    groups.push_back({i});
  }
  return groups;
}

namespace detail {

// Portable uniform draw in [-1, 1) from a 64-bit engine.
inline double uniform_pm1(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

inline Eigen::VectorXcd random_vector(Eigen::Index dim, std::mt19937_64& rng, bool real) {
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = uniform_pm1(rng);
    const double im = real ? 0.0 : uniform_pm1(rng);
    v[i] = Complex(re, im);
  }
  return v;
}

// Two passes of classical Gram-Schmidt against `basis`; returns the
// accumulated coefficients.
inline Eigen::VectorXcd orthogonalize(Eigen::VectorXcd& w, const std::vector<Eigen::VectorXcd>& basis) {
  Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const Complex c = basis[i].dot(w);
      w -= c * basis[i];
      coeffs[static_cast<Eigen::Index>(i)] += c;
    }
  }
  return coeffs;
}

inline EigenResult finish(std::vector<double> values, std::vector<Eigen::VectorXcd> vectors,
                          std::vector<double> residuals, const SectorBasis& basis, double group_tol) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  EigenResult r;
  for (auto i : order) {
    r.eigenvalues.push_back(values[i]);
    r.eigenvectors.push_back(StateVector::from(basis, std::move(vectors[i])));
    r.residual_norms.push_back(residuals[i]);
  }
  r.degeneracy_groups = degeneracy_groups(r.eigenvalues, group_tol);
  return r;
}

inline EigenResult dense_solve(const HamiltonianIR& h, const SectorBasis& basis, const SolverOptions& opt) {
  const Eigen::MatrixXcd m = dense_matrix(h, basis);
  const auto k = static_cast<Eigen::Index>(opt.k);
  std::vector<double> values;
  std::vector<Eigen::VectorXcd> vectors;
  std::vector<double> residuals;
  // A real symmetric matrix keeps degenerate eigenvectors real.
  if (h.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real());
    for (Eigen::Index i = 0; i < k; ++i) {
      values.push_back(es.eigenvalues()[i]);
      vectors.emplace_back(es.eigenvectors().col(i).cast<Complex>());
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    for (Eigen::Index i = 0; i < k; ++i) {
      values.push_back(es.eigenvalues()[i]);
      vectors.emplace_back(es.eigenvectors().col(i));
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    residuals.push_back((m * vectors[i] - values[i] * vectors[i]).norm());
  }
  return finish(std::move(values), std::move(vectors), std::move(residuals), basis, opt.group_tol);
}

class LanczosSolver {
 public:
  LanczosSolver(const HamiltonianIR& h, const SectorBasis& basis, const SolverOptions& opt)
      : op_(h, basis), basis_(basis), opt_(opt), real_(h.is_real()), rng_(opt.seed) {}

  EigenResult run() {
    const auto dim = static_cast<Eigen::Index>(basis_.size());
    Eigen::VectorXcd start = random_vector(dim, rng_, real_);
    while (static_cast<int>(locked_.size()) < opt_.k) {
      Found f = lowest_in_complement(start);
      double resid = true_residual(f.vector, f.value);
      // Loss of orthogonality can leave the estimate optimistic; refine.
      while (resid > opt_.tol) {
        last_residual_ = resid;
        Found again = lowest_in_complement(f.vector);
        again.next_hint = f.next_hint;
        f = std::move(again);
        resid = true_residual(f.vector, f.value);
      }
      locked_values_.push_back(f.value);
      locked_residuals_.push_back(resid);
      locked_.push_back(std::move(f.vector));
      // Next start: the runner-up Ritz vector plus a random component, which
      // reintroduces directions of any degenerate partner.
      start = random_vector(dim, rng_, real_);
      if (f.next_hint.size() == dim) start = start * 1e-3 + f.next_hint;
    }
    return finish(locked_values_, locked_, locked_residuals_, basis_, opt_.group_tol);
  }

 private:
  struct Found {
    double value;
    Eigen::VectorXcd vector;
    Eigen::VectorXcd next_hint;
  };

  Eigen::VectorXcd matvec(const Eigen::VectorXcd& v) {
    if (++matvecs_ > opt_.max_iterations) {
      std::vector<double> best = locked_residuals_;
      best.push_back(last_residual_);
      throw ConvergenceError("Lanczos did not converge within " + std::to_string(opt_.max_iterations) +
                                 " matrix-vector products",
                             best);
    }
    Eigen::VectorXcd out;
    op_.apply(v, out, opt_.threads);
    return out;
  }

  double true_residual(const Eigen::VectorXcd& v, double value) {
    return (matvec(v) - value * v).norm();
  }

  static Eigen::VectorXcd combine(const std::vector<Eigen::VectorXcd>& v, const Eigen::VectorXcd& y) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.front().size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out += y[i] * v[static_cast<std::size_t>(i)];
    return out;
  }

  // Lowest eigenpair of H restricted to the orthogonal complement of the
  // locked vectors. The basis v always holds `computed` vectors whose H-images
  // are known plus one pending vector; H V = V T + v_pending c^T, so the
  // residual of a Ritz pair (theta, y) is |c^T y|.
  Found lowest_in_complement(Eigen::VectorXcd start) {
    const auto dim = static_cast<Eigen::Index>(basis_.size());
    const int free_dim = static_cast<int>(dim) - static_cast<int>(locked_.size());
    const int m = std::max(1, std::min(opt_.krylov_dim, free_dim));
    orthogonalize(start, locked_);
    if (start.norm() < 1e-8) {
      start = random_vector(dim, rng_, real_);
      orthogonalize(start, locked_);
    }
    std::vector<Eigen::VectorXcd> v{start.normalized()};
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    int computed = 0;
    while (true) {
      bool exhausted = false;
      bool converged = false;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
      Eigen::VectorXcd coupling;
      auto ritz = [&] {
        es.compute(t.topLeftCorner(computed, computed));
        coupling = exhausted ? Eigen::VectorXcd::Zero(computed)
                             : Eigen::VectorXcd(t.row(computed).head(computed).transpose());
        last_residual_ = std::abs((coupling.transpose() * es.eigenvectors().col(0)).value());
        converged = exhausted || last_residual_ <= opt_.tol * 0.1;
      };
      while (computed < m) {
        const int j = computed;
        Eigen::VectorXcd w = matvec(v[static_cast<std::size_t>(j)]);
        orthogonalize(w, locked_);
        const Eigen::VectorXcd h = orthogonalize(w, v);
        for (Eigen::Index i = 0; i < h.size(); ++i) {
          t(i, j) = h[i];
          t(j, i) = std::conj(h[i]);
        }
        t(j, j) = h[j].real();
        ++computed;
        const double beta = w.norm();
        if (beta < 1e-12 * (1.0 + std::abs(t(j, j))) || computed >= free_dim) {
          exhausted = true;
          break;
        }
        v.push_back(w / beta);
        t(j + 1, j) = beta;
        t(j, j + 1) = beta;
        if (computed % 10 == 0 && computed < m) {
          ritz();
          if (converged) break;
        }
      }
      ritz();
      if (converged) {
        Found f{es.eigenvalues()[0], combine(v, es.eigenvectors().col(0)).normalized(), {}};
        if (computed > 1) f.next_hint = combine(v, es.eigenvectors().col(1)).normalized();
        return f;
      }
      // Thick restart on the lowest Ritz vectors; the pending vector stays.
      const int keep = std::min(std::max(6, m / 3), computed - 1);
      std::vector<Eigen::VectorXcd> nv;
      Eigen::MatrixXcd nt = Eigen::MatrixXcd::Zero(m + 1, m + 1);
      for (int i = 0; i < keep; ++i) {
        nv.push_back(combine(v, es.eigenvectors().col(i)));
        nt(i, i) = es.eigenvalues()[i];
        const Complex s = (coupling.transpose() * es.eigenvectors().col(i)).value();
        nt(keep, i) = s;
        nt(i, keep) = std::conj(s);
      }
      nv.push_back(v[static_cast<std::size_t>(computed)]);
      v = std::move(nv);
      t = std::move(nt);
      computed = keep;
    }
  }

  CompiledOperator op_;
  const SectorBasis& basis_;
  SolverOptions opt_;
  bool real_;
  std::mt19937_64 rng_;
  int matvecs_ = 0;
  double last_residual_ = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXcd> locked_;
  std::vector<double> locked_values_;
  std::vector<double> locked_residuals_;
};

}  // namespace detail

/// The k lowest eigenpairs of H on `basis`. Deterministic for a fixed seed.
inline EigenResult lowest_eigenpairs(const HamiltonianIR& h, const SectorBasis& basis,
                                     const SolverOptions& options = {}, bool force_iterative = false) {
  if (options.k < 1) throw InvalidArgument("k must be at least 1");
  if (basis.size() < static_cast<std::size_t>(options.k)) {
    throw InvalidArgument("sector dimension " + std::to_string(basis.size()) + " is smaller than k = " +
                          std::to_string(options.k));
  }
  if (!force_iterative && basis.size() <= std::min(options.dense_threshold, kDenseCap)) {
    return detail::dense_solve(h, basis, options);
  }
  return detail::LanczosSolver(h, basis, options).run();
}

struct CanonicalState {
  StateVector state;
  double max_imag_residual = 0.0;
};

/// Divides out the phase of the largest-magnitude amplitude (ties within
/// 1e-10 relative go to the lowest index) and reports the largest imaginary
/// part left over. Does not throw.
inline CanonicalState try_canonicalize_real(const StateVector& state) {
  CanonicalState out{state, 0.0};
  auto& a = out.state.amplitudes;
  if (a.size() == 0) return out;
  const double max_abs = a.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return out;
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) >= max_abs * (1.0 - 1e-10)) {
      pivot = i;
      break;
    }
  }
  const Complex phase = a[pivot] / std::abs(a[pivot]);
  a *= std::conj(phase);
  a[pivot] = std::abs(a[pivot]);
  double resid = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) resid = std::max(resid, std::abs(a[i].imag()));
  out.max_imag_residual = resid;
  return out;
}

/// Same as try_canonicalize_real, but throws NotRealError when the state is
/// not real up to a global phase within phase_tol.
inline CanonicalState canonicalize_real(const StateVector& state, double phase_tol = 1e-8) {
  CanonicalState c = try_canonicalize_real(state);
  if (c.max_imag_residual > phase_tol) {
    throw NotRealError("state is not real up to a global phase (residual " +
                           std::to_string(c.max_imag_residual) + ")",
                       c.max_imag_residual);
  }
  return c;
}

}  // namespace signpos
