#pragma once

// Chain geometry and the fixed-magnetization computational basis.
//
// Bit convention used throughout the library: bit i of a configuration is 1
// when site i is in |1>, the up-spin state with Sz = +1/2.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "signpos/errors.hpp"

namespace signpos {

enum class Boundary { open, periodic };

inline std::string_view to_string(Boundary b) { return b == Boundary::open ? "obc" : "pbc"; }

inline Boundary parse_boundary(std::string_view s) {
  if (s == "obc" || s == "open") return Boundary::open;
  if (s == "pbc" || s == "periodic") return Boundary::periodic;
  throw InvalidArgument("unknown boundary '" + std::string(s) + "' (expected obc or pbc)");
}

struct Bond {
  int i = 0;
  int j = 0;
  friend bool operator==(const Bond&, const Bond&) = default;
};

inline constexpr int kMaxSites = 26;

/// Distance between two sites along the chain, honoring the boundary.
inline int chain_distance(int a, int b, int n_sites, Boundary boundary) {
  int d = a > b ? a - b : b - a;
  if (boundary == Boundary::periodic) d = std::min(d, n_sites - d);
  return d;
}

class ChainModel {
 public:
  int n_sites() const { return n_sites_; }
  Boundary boundary() const { return boundary_; }
  double j1() const { return j1_; }
  double j2() const { return j2_; }
  const std::vector<Bond>& j1_bonds() const { return j1_bonds_; }
  const std::vector<Bond>& j2_bonds() const { return j2_bonds_; }

  friend ChainModel build_chain(int n_sites, Boundary boundary, double j1, double j2);

 private:
  int n_sites_ = 0;
  Boundary boundary_ = Boundary::open;
  double j1_ = 0.0;
  double j2_ = 0.0;
  std::vector<Bond> j1_bonds_;
  std::vector<Bond> j2_bonds_;
};

/// Builds the J1-J2 chain. Open chains accept 2..26 sites, periodic chains
/// 6..26 (a 4-site ring would list each J2 bond twice).
inline ChainModel build_chain(int n_sites, Boundary boundary, double j1, double j2) {
  const int min_sites = boundary == Boundary::open ? 2 : 6;
  if (n_sites % 2 != 0 || n_sites < min_sites || n_sites > kMaxSites) {
    throw InvalidGeometry("n_sites must be even and in [" + std::to_string(min_sites) + ", " +
                          std::to_string(kMaxSites) + "] for " +
                          std::string(to_string(boundary)) + ", got " +
                          std::to_string(n_sites));
  }
  ChainModel m;
  m.n_sites_ = n_sites;
  m.boundary_ = boundary;
  m.j1_ = j1;
  m.j2_ = j2;
  const int n1 = boundary == Boundary::open ? n_sites - 1 : n_sites;
  const int n2 = boundary == Boundary::open ? n_sites - 2 : n_sites;
  for (int i = 0; i < n1; ++i) m.j1_bonds_.push_back({i, (i + 1) % n_sites});
  for (int i = 0; i < n2; ++i) m.j2_bonds_.push_back({i, (i + 2) % n_sites});
  return m;
}

using Config = std::uint32_t;

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

/// Rank of `bits` among all words with the same popcount, in ascending order
/// (combinatorial number system).
inline std::uint64_t rank_in_popcount(std::uint64_t bits) {
  std::uint64_t rank = 0;
  int k = 0;
  while (bits != 0) {
    const int pos = std::countr_zero(bits);
    ++k;
    rank += binomial(pos, k);
    bits &= bits - 1;
  }
  return rank;
}

class SectorBasis {
 public:
  int n_sites() const { return n_sites_; }
  int n_up() const { return n_up_; }
  std::size_t size() const { return configs_.size(); }
  const std::vector<Config>& configs() const { return configs_; }
  Config operator[](std::size_t k) const { return configs_[k]; }

  /// Ordinal of `config`, or nullopt when it is outside this sector.
  std::optional<std::size_t> index_of(Config config) const {
    auto it = std::lower_bound(configs_.begin(), configs_.end(), config);
    if (it == configs_.end() || *it != config) return std::nullopt;
    return static_cast<std::size_t>(it - configs_.begin());
  }

  bool same_sector(const SectorBasis& other) const {
    return n_sites_ == other.n_sites_ && n_up_ == other.n_up_;
  }

  friend SectorBasis enumerate_sector(int n_sites, int n_up);

 private:
  int n_sites_ = 0;
  int n_up_ = 0;
  std::vector<Config> configs_;
};

/// All n_sites-bit words with popcount n_up, ascending.
inline SectorBasis enumerate_sector(int n_sites, int n_up) {
  if (n_sites < 1 || n_sites > 30) throw InvalidGeometry("n_sites out of range for a sector basis");
  if (n_up < 0 || n_up > n_sites) {
    throw InvalidArgument("n_up must lie in [0, " + std::to_string(n_sites) + "], got " +
                          std::to_string(n_up));
  }
  SectorBasis b;
  b.n_sites_ = n_sites;
  b.n_up_ = n_up;
  b.configs_.reserve(binomial(n_sites, n_up));
  if (n_up == 0) {
    b.configs_.push_back(0);
    return b;
  }
  // Gosper's hack walks same-popcount words in increasing order.
  const std::uint64_t limit = std::uint64_t{1} << n_sites;
  std::uint64_t x = (std::uint64_t{1} << n_up) - 1;
  while (x < limit) {
    b.configs_.push_back(static_cast<Config>(x));
    const std::uint64_t c = x & (~x + 1);
    const std::uint64_t r = x + c;
    x = (((r ^ x) >> 2) / c) | r;
  }
  return b;
}

/// Default sector for ground-state work: total Sz = 0.
inline SectorBasis half_filling_sector(int n_sites) { return enumerate_sector(n_sites, n_sites / 2); }

}  // namespace signpos
