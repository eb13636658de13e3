#pragma once

#include <complex>
#include <string>

#include <Eigen/Core>

#include "signpos/errors.hpp"
#include "signpos/lattice_basis.hpp"

namespace signpos {

using Complex = std::complex<double>;

/// Complex amplitudes over a SectorBasis, stored in basis order.
struct StateVector {
  int n_sites = 0;
  int n_up = 0;
  Eigen::VectorXcd amplitudes;

  static StateVector zeros(const SectorBasis& basis) {
    return {basis.n_sites(), basis.n_up(),
            Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()))};
  }

  static StateVector from(const SectorBasis& basis, Eigen::VectorXcd amps) {
    StateVector s{basis.n_sites(), basis.n_up(), std::move(amps)};
    if (static_cast<std::size_t>(s.amplitudes.size()) != basis.size()) {
      throw BasisMismatch("amplitude count does not match the sector dimension");
    }
    return s;
  }

  Eigen::Index size() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }

  bool matches(const SectorBasis& basis) const {
    return n_sites == basis.n_sites() && n_up == basis.n_up() &&
           static_cast<std::size_t>(amplitudes.size()) == basis.size();
  }
};

inline void require_basis(const StateVector& s, const SectorBasis& basis) {
  if (!s.matches(basis)) {
    throw BasisMismatch("state (n=" + std::to_string(s.n_sites) + ", n_up=" + std::to_string(s.n_up) +
                        ") does not live on basis (n=" + std::to_string(basis.n_sites()) +
                        ", n_up=" + std::to_string(basis.n_up()) + ")");
  }
}

inline void require_same_sector(const StateVector& a, const StateVector& b) {
  if (a.n_sites != b.n_sites || a.n_up != b.n_up || a.size() != b.size()) {
    throw BasisMismatch("states live on different sector bases");
  }
}

}  // namespace signpos
