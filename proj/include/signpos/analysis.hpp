#pragma once

// Analyses on top of the solver: J2 sweeps of sign metrics, reference-state overlap
// curves, positivization of degenerate levels and entanglement entropy.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "signpos/eigensolver.hpp"
#include "signpos/errors.hpp"
#include "signpos/hamiltonian_ir.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/protocols.hpp"
#include "signpos/state_vector.hpp"

namespace signpos {

// ---- ground levels -----------------------------------------------------------

struct GroundLevel {
  double energy = 0.0;
  std::vector<StateVector> vectors;  // orthonormal basis of the lowest level
  std::vector<double> next_energies;  // the rest of the computed spectrum
  std::size_t degeneracy() const { return vectors.size(); }
};

/// Lowest level of H on `basis`, growing the number of requested eigenpairs
/// until the level is closed off by a higher eigenvalue.
inline GroundLevel solve_ground_level(const HamiltonianIR& h, const SectorBasis& basis, SolverOptions opt = {}) {
  opt.k = std::max(opt.k, 2);
  while (true) {
    opt.k = std::min<int>(opt.k, static_cast<int>(basis.size()));
    const EigenResult r = lowest_eigenpairs(h, basis, opt);
    const auto& g = r.ground_group();
    if (g.size() < r.eigenvalues.size() || static_cast<std::size_t>(opt.k) == basis.size()) {
      GroundLevel level;
      level.energy = r.eigenvalues[g.front()];
      for (auto i : g) level.vectors.push_back(r.eigenvectors[i]);
      for (std::size_t i = g.size(); i < r.eigenvalues.size(); ++i) level.next_energies.push_back(r.eigenvalues[i]);
      return level;
    }
    opt.k *= 2;
  }
}

inline GroundLevel solve_ground_level(const ChainModel& model, const SolverOptions& opt = {}) {
  return solve_ground_level(heisenberg_terms(model), half_filling_sector(model.n_sites()), opt);
}

// ---- degenerate-level positivization ---------------------------------------

struct PositivizedSet {
  std::vector<StateVector> vectors;  // protocol-transformed, canonicalized, orthonormal
  std::vector<double> signs;
  bool converged = true;
  int sweeps = 0;
};

namespace detail {

inline double pair_objective(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  return std::abs(sign_objective(c * a + s * b)) + std::abs(sign_objective(-s * a + c * b));
}

// Best rotation angle for one column pair: coarse grid, then golden section.
inline double best_pair_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  constexpr int kGrid = 72;
  const double step = 2.0 * M_PI / kGrid;
  double best_phi = 0.0, best = pair_objective(a, b, 0.0);
  for (int i = 1; i < kGrid; ++i) {
    const double v = pair_objective(a, b, i * step);
    if (v > best) best = v, best_phi = i * step;
  }
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_phi - step, hi = best_phi + step;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = pair_objective(a, b, x1), f2 = pair_objective(a, b, x2);
  for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + g * (hi - lo), f2 = pair_objective(a, b, x2);
    } else {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - g * (hi - lo), f1 = pair_objective(a, b, x1);
    }
  }
  const double phi = f1 > f2 ? x1 : x2;
  return std::max(f1, f2) > best ? phi : best_phi;
}

inline double total_sign(const Eigen::MatrixXd& x) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) s += std::abs(sign_objective(x.col(k)));
  return s;
}

// Jacobi sweeps over column pairs maximizing sum_k |<Sign>(x_k)|.
inline std::pair<Eigen::MatrixXd, bool> jacobi_positivize(Eigen::MatrixXd x, int& sweeps, int max_sweeps = 200) {
  double total = total_sign(x);
  for (sweeps = 0; sweeps < max_sweeps; ++sweeps) {
    const double before = total;
    for (Eigen::Index p = 0; p < x.cols(); ++p) {
      for (Eigen::Index q = p + 1; q < x.cols(); ++q) {
        const Eigen::VectorXd a = x.col(p), b = x.col(q);
        const double phi = best_pair_angle(a, b);
        if (pair_objective(a, b, phi) <= pair_objective(a, b, 0.0)) continue;
        const double c = std::cos(phi), s = std::sin(phi);
        x.col(p) = c * a + s * b;
        x.col(q) = -s * a + c * b;
      }
    }
    total = total_sign(x);
    if (total - before < 1e-10) return {x, true};
  }
  return {x, false};
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index g, std::mt19937_64& rng) {
  Eigen::MatrixXd m(g, g);
  for (Eigen::Index i = 0; i < g; ++i)
    for (Eigen::Index j = 0; j < g; ++j) m(i, j) = uniform_pm1(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(g, g);
}

}  // namespace detail

/// Applies `protocol` to a degenerate level and finds an orthonormal basis of
/// the transformed level maximizing the summed |<Sign>| (pairwise Jacobi
/// rotations, restarted from 8 seeded random frames, best kept). Outputs are
/// canonicalized; `signs` are their <Sign> values.
inline PositivizedSet positivize_degenerate_subspace(std::span<const StateVector> eigenvectors,
                                                     const Protocol& protocol, const SectorBasis& basis,
                                                     std::uint64_t seed = 1, int restarts = 8) {
  if (eigenvectors.empty()) throw InvalidArgument("empty eigenvector set");
  const Eigen::MatrixXd frame = real_frame(eigenvectors);
  std::vector<StateVector> transformed;
  for (Eigen::Index j = 0; j < frame.cols(); ++j) {
    transformed.push_back(apply_protocol(protocol, basis, StateVector::from(basis, frame.col(j).cast<Complex>())));
  }
  // A common phase for the whole level: the one that makes the largest
  // amplitude of the first transformed vector real.
  const auto& first = transformed.front().amplitudes;
  Eigen::Index pivot = 0;
  first.cwiseAbs().maxCoeff(&pivot);
  const Complex phase = first[pivot] / std::abs(first[pivot]);
  Eigen::MatrixXd x(first.size(), static_cast<Eigen::Index>(transformed.size()));
  double resid = 0.0;
  for (std::size_t j = 0; j < transformed.size(); ++j) {
    const Eigen::VectorXcd a = transformed[j].amplitudes * std::conj(phase);
    resid = std::max(resid, a.imag().cwiseAbs().maxCoeff());
    x.col(static_cast<Eigen::Index>(j)) = a.real();
  }
  if (resid > kRealTolerance) {
    throw NotRealError("protocol does not map the level to a real subspace", resid);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  x = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());

  PositivizedSet out;
  const Eigen::Index g = x.cols();
  double best_total = -1.0;
  Eigen::MatrixXd best;
  std::mt19937_64 rng(seed);
  for (int start = 0; start <= (g > 1 ? restarts : 0); ++start) {
    const Eigen::MatrixXd init = start == 0 ? x : Eigen::MatrixXd(x * detail::random_orthogonal(g, rng));
    int sweeps = 0;
    auto [y, ok] = detail::jacobi_positivize(init, sweeps);
    const double total = detail::total_sign(y);
    if (total > best_total + 1e-14) {
      best_total = total;
      best = y;
      out.converged = ok;
      out.sweeps = sweeps;
    }
  }
  for (Eigen::Index k = 0; k < g; ++k) {
    StateVector v = StateVector::from(basis, best.col(k).cast<Complex>());
    auto c = canonicalize_real(v);
    SignReport r = sign_average(c.state);
    if (r.sign_average < 0) {
      c.state.amplitudes = -c.state.amplitudes;
      r = r.oriented();
    }
    out.vectors.push_back(std::move(c.state));
    out.signs.push_back(r.sign_average);
  }
  return out;
}

// ---- sweeps ------------------------------------------------------------------

struct SweepSpec {
  std::vector<int> n_sites;
  Boundary boundary = Boundary::open;
  double j1 = 1.0;
  std::vector<double> j2_grid;
  std::vector<std::string> protocols{"raw", "mpr", "odd-even", "mpr-cz"};  // by name
  std::vector<Protocol> custom;  // applied where n_sites matches
  SolverOptions solver;
  int threads = 1;

  void validate() const {
    if (n_sites.empty()) throw InvalidArgument("sweep needs at least one system size");
    if (j2_grid.empty()) throw InvalidArgument("sweep needs a nonempty J2 grid");
    if (protocols.empty() && custom.empty()) throw InvalidArgument("sweep needs at least one protocol");
    for (std::size_t i = 0; i < j2_grid.size(); ++i) {
      if (!(j2_grid[i] >= 0.0 && j2_grid[i] <= 2.0)) throw InvalidArgument("J2 grid must lie in [0, 2]");
      if (i && j2_grid[i] <= j2_grid[i - 1]) throw InvalidArgument("J2 grid must be strictly ascending");
    }
  }
};

struct SweepRow {
  int n_sites = 0;
  Boundary boundary = Boundary::open;
  double j2 = 0.0;
  std::string protocol;
  double sign_average = std::numeric_limits<double>::quiet_NaN();
  double negative_fraction = std::numeric_limits<double>::quiet_NaN();
  double negative_mass = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  std::size_t degeneracy = 0;
  std::string error;  // empty on success
  bool ok() const { return error.empty(); }
};

struct SweepTable {
  std::vector<SweepRow> rows;

  std::vector<const SweepRow*> select(int n, const std::string& protocol) const {
    std::vector<const SweepRow*> out;
    for (const auto& r : rows) {
      if (r.n_sites == n && r.protocol == protocol) out.push_back(&r);
    }
    return out;
  }
  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
  }
};

/// The sign metrics of every protocol at one point. Protocols that do not
/// apply (wrong size or parity) or give a non-real state produce error rows.
inline std::vector<SweepRow> sweep_point(int n, Boundary boundary, double j1, double j2,
                                         const std::vector<std::string>& names, const std::vector<Protocol>& custom,
                                         const SolverOptions& solver) {
  std::vector<SweepRow> rows;
  auto blank = [&](const std::string& label) {
    SweepRow r;
    r.n_sites = n;
    r.boundary = boundary;
    r.j2 = j2;
    r.protocol = label;
    return r;
  };
  struct Planned {
    std::string label;
    std::optional<Protocol> protocol;
    std::string error;
  };
  std::vector<Planned> plan;
  for (const auto& name : names) {
    try {
      plan.push_back({name, protocol_by_name(name, n), ""});
    } catch (const Error& e) {
      plan.push_back({name, std::nullopt, e.what()});
    }
  }
  for (const auto& p : custom) plan.push_back({p.label.empty() ? "custom" : p.label, p, ""});
  try {
    const auto model = build_chain(n, boundary, j1, j2);
    const auto basis = half_filling_sector(n);
    const GroundLevel level = solve_ground_level(heisenberg_terms(model), basis, solver);
    const Eigen::MatrixXd frame = real_frame(level.vectors);
    for (const auto& [label, protocol, plan_error] : plan) {
      SweepRow r = blank(label);
      r.energy = level.energy;
      r.degeneracy = level.degeneracy();
      if (!protocol) {
        r.error = plan_error;
      } else if (protocol->n_sites != n) {
        r.error = "protocol is defined for " + std::to_string(protocol->n_sites) + " sites";
      } else {
        const auto s = protocol_sign(*protocol, basis, frame, kRealTolerance, solver.seed);
        if (!s.real) {
          r.error = "transformed state is not real";
        } else {
          r.sign_average = s.report.sign_average;
          r.negative_fraction = s.report.negative_fraction;
          r.negative_mass = s.report.negative_mass;
        }
      }
      rows.push_back(std::move(r));
    }
  } catch (const Error& e) {
    rows.clear();
    for (const auto& entry : plan) {
      SweepRow r = blank(entry.label);
      r.error = e.what();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

/// One row per (n, j2, protocol), ordered by n, then j2, then protocol list
/// order. Points run in parallel on spec.threads workers.
inline SweepTable run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Job {
    int n;
    double j2;
  };
  std::vector<Job> jobs;
  for (int n : spec.n_sites)
    for (double j2 : spec.j2_grid) jobs.push_back({n, j2});
  std::vector<std::vector<SweepRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = sweep_point(jobs[i].n, spec.boundary, spec.j1, jobs[i].j2, spec.protocols, spec.custom, spec.solver);
    }
  };
  const int threads = std::max(1, std::min<int>(spec.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  SweepTable table;
  for (auto& r : results)
    for (auto& row : r) table.rows.push_back(std::move(row));
  return table;
}

/// Location of the minimum of sampled values: a parabola through the lowest
/// grid point and its two neighbors, or the grid point itself at an edge.
inline double locate_minimum(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("locate_minimum needs matching nonempty samples");
  const auto i = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  if (i == 0 || i + 1 == x.size()) return x[i];
  const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
  const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  if (den == 0.0) return x1;
  return std::clamp(x1 - 0.5 * num / den, x0, x2);
}

/// Consecutive energies that jump by more than `factor` times both
/// neighboring steps; returns the indices of suspicious points.
inline std::vector<std::size_t> energy_jumps(std::span<const double> energies, double factor = 10.0) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < energies.size(); ++i) {
    const double left = std::abs(energies[i] - energies[i - 1]);
    const double right = std::abs(energies[i + 1] - energies[i]);
    const double prev = i >= 2 ? std::abs(energies[i - 1] - energies[i - 2]) : right;
    if (left > factor * std::max(prev, right) && left > 1e-12) out.push_back(i);
  }
  return out;
}

// ---- reference overlaps ------------------------------------------------------

struct OverlapRow {
  int n_sites = 0;
  Boundary boundary = Boundary::open;
  double j2 = 0.0;
  double overlap_i = 0.0;    // with the J2 = 0 ground state
  double overlap_ii = 0.0;   // with the J2 = 0.5 ground state
  double overlap_iii = 0.0;  // with the best positivized J1 = 0, J2 = 1 state
  double energy = 0.0;
  std::size_t degeneracy = 0;
};

namespace detail {

// Largest |<a|b>| over unit a in span(A) and b in span(B): the top singular
// value of A^H B.
inline double subspace_overlap(std::span<const StateVector> a, std::span<const StateVector> b) {
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      require_same_sector(a[i], b[j]);
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i].amplitudes.dot(b[j].amplitudes);
    }
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()[0];
}

}  // namespace detail

/// Overlaps |<ref|psi(J2)>| of the ground level along the grid with the
/// references (i) J1=1, J2=0, (ii) J1=1, J2=0.5 and (iii) J1=0, J2=1. A
/// degenerate level on either side contributes its best vector; for (iii) the
/// candidates are the ABBA-positivized vectors of its level.
inline std::vector<OverlapRow> reference_overlap_curves(int n, Boundary boundary, std::span<const double> j2_grid,
                                                        const SolverOptions& solver = {}) {
  const auto basis = half_filling_sector(n);
  const auto ref_i = solve_ground_level(build_chain(n, boundary, 1.0, 0.0), solver);
  const auto ref_ii = solve_ground_level(build_chain(n, boundary, 1.0, 0.5), solver);
  const auto level_iii = solve_ground_level(build_chain(n, boundary, 0.0, 1.0), solver);
  const Protocol abba = odd_even_protocol(n);
  const auto positive = positivize_degenerate_subspace(level_iii.vectors, abba, basis, solver.seed);
  std::vector<StateVector> ref_iii;
  for (const auto& v : positive.vectors) ref_iii.push_back(apply_protocol_inverse(abba, basis, v));

  std::vector<OverlapRow> rows;
  for (double j2 : j2_grid) {
    const auto level = solve_ground_level(build_chain(n, boundary, 1.0, j2), solver);
    OverlapRow r{n, boundary, j2, 0.0, 0.0, 0.0, level.energy, level.degeneracy()};
    r.overlap_i = detail::subspace_overlap(ref_i.vectors, level.vectors);
    r.overlap_ii = detail::subspace_overlap(ref_ii.vectors, level.vectors);
    for (const auto& v : ref_iii) {
      r.overlap_iii = std::max(r.overlap_iii, detail::subspace_overlap(std::span<const StateVector>(&v, 1), level.vectors));
    }
    rows.push_back(r);
  }
  return rows;
}

// ---- entanglement entropy ----------------------------------------------------

enum class PartitionKind { contiguous_half, abba_sublattice, abab_sublattice };

inline std::string_view to_string(PartitionKind k) {
  switch (k) {
    case PartitionKind::contiguous_half: return "contiguous_half";
    case PartitionKind::abba_sublattice: return "abba_sublattice";
    case PartitionKind::abab_sublattice: return "abab_sublattice";
  }
  return "?";
}

inline PartitionKind parse_partition(std::string_view s) {
  if (s == "contiguous_half") return PartitionKind::contiguous_half;
  if (s == "abba_sublattice") return PartitionKind::abba_sublattice;
  if (s == "abab_sublattice") return PartitionKind::abab_sublattice;
  throw InvalidArgument("unknown partition '" + std::string(s) + "'");
}

/// Subsystem A as a site mask: the first half of the chain, the B sites of
/// the ABBA pattern, or the odd sites.
inline Config bipartition_mask(int n_sites, PartitionKind kind) {
  if (n_sites < 1 || n_sites > 30) throw InvalidGeometry("n_sites out of range");
  Config m = 0;
  for (int i = 0; i < n_sites; ++i) {
    bool in_a = false;
    switch (kind) {
      case PartitionKind::contiguous_half: in_a = i < n_sites / 2; break;
      case PartitionKind::abba_sublattice: in_a = abba_b_site(i); break;
      case PartitionKind::abab_sublattice: in_a = i % 2 == 1; break;
    }
    if (in_a) m |= Config{1} << i;
  }
  return m;
}

namespace detail {

// Gathers the bits of `c` selected by `mask` into the low bits.
inline std::uint64_t extract_bits(Config c, Config mask) {
  std::uint64_t out = 0;
  int k = 0;
  for (Config m = mask; m; m &= m - 1, ++k) {
    if (c & (m & (~m + 1))) out |= std::uint64_t{1} << k;
  }
  return out;
}

}  // namespace detail

/// Eigenvalues of rho_A for subsystem `mask`. The sector fixes the total
/// magnetization, so rho_A is block diagonal in the number of up spins in A;
/// each block is M M^dagger for the corresponding slice of the Schmidt matrix.
inline std::vector<double> reduced_density_spectrum(const StateVector& state, const SectorBasis& basis, Config mask) {
  require_basis(state, basis);
  const int n = basis.n_sites();
  const Config full = n == 32 ? ~Config{0} : (Config{1} << n) - 1;
  if (mask & ~full) throw InvalidArgument("partition mask has sites outside the chain");
  const int size_a = std::popcount(mask);
  if (size_a > 16) throw TooLarge("subsystem A has " + std::to_string(size_a) + " sites (max 16)");
  const Config rest = full & ~mask;
  const int size_b = n - size_a;
  std::vector<Eigen::MatrixXcd> blocks(static_cast<std::size_t>(size_a + 1));
  for (int k = 0; k <= size_a; ++k) {
    const int kb = basis.n_up() - k;
    if (kb < 0 || kb > size_b) continue;
    blocks[static_cast<std::size_t>(k)] = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(binomial(size_a, k)),
                                                                 static_cast<Eigen::Index>(binomial(size_b, kb)));
  }
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Config c = basis[i];
    const auto a = detail::extract_bits(c, mask);
    const auto b = detail::extract_bits(c, rest);
    auto& blk = blocks[static_cast<std::size_t>(std::popcount(a))];
    blk(static_cast<Eigen::Index>(rank_in_popcount(a)), static_cast<Eigen::Index>(rank_in_popcount(b))) +=
        state.amplitudes[static_cast<Eigen::Index>(i)];
  }
  std::vector<double> spectrum;
  for (const auto& m : blocks) {
    if (m.size() == 0) continue;
    const Eigen::MatrixXcd gram = m.rows() <= m.cols() ? Eigen::MatrixXcd(m * m.adjoint())
                                                       : Eigen::MatrixXcd(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) spectrum.push_back(es.eigenvalues()[i]);
  }
  return spectrum;
}

/// Von Neumann entropy of rho_A in bits.
inline double entanglement_entropy(const StateVector& state, const SectorBasis& basis, Config mask) {
  double s = 0.0;
  for (double l : reduced_density_spectrum(state, basis, mask)) {
    if (l > 1e-300) s -= l * std::log2(l);
  }
  return std::max(0.0, s);
}

struct EntropyRow {
  int n_sites = 0;
  Boundary boundary = Boundary::open;
  double j2 = 0.0;
  PartitionKind partition = PartitionKind::contiguous_half;
  std::string state_kind;
  double entropy_bits = 0.0;
};

/// Entropies of the ground state and its protocol-transformed versions. For a
/// degenerate level, the vector with the largest raw <Sign> is used for every
/// state kind.
inline std::vector<EntropyRow> entropy_rows(int n, Boundary boundary, double j1, std::span<const double> j2_grid,
                                            std::span<const PartitionKind> partitions,
                                            std::span<const std::string> state_kinds,
                                            const SolverOptions& solver = {}) {
  const auto basis = half_filling_sector(n);
  std::vector<EntropyRow> rows;
  for (double j2 : j2_grid) {
    const auto level = solve_ground_level(build_chain(n, boundary, j1, j2), solver);
    const auto frame = real_frame(level.vectors);
    const auto raw = protocol_sign(identity_protocol(n), basis, frame, kRealTolerance, solver.seed);
    const StateVector psi = StateVector::from(basis, raw.best_vector.normalized().cast<Complex>());
    for (auto part : partitions) {
      const Config mask = bipartition_mask(n, part);
      for (const auto& kind : state_kinds) {
        const StateVector s = apply_protocol(protocol_by_name(kind, n), basis, psi);
        rows.push_back({n, boundary, j2, part, kind, entanglement_entropy(s, basis, mask)});
      }
    }
  }
  return rows;
}

}  // namespace signpos
