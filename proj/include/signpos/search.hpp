#pragma once

// Exhaustive and restricted searches over positivization protocols, ranked
// by |<Sign>| of the transformed ground state (or ground subspace).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "signpos/errors.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/protocols.hpp"
#include "signpos/rotation.hpp"
#include "signpos/state_vector.hpp"

namespace signpos {

inline constexpr std::uint64_t kExhaustiveCap = 1220703125ULL;  // 5^13

struct SearchConfig {
  bool fix_first_site = true;
  std::vector<Rotation> angle_set{kAllRotations.begin(), kAllRotations.end()};
  std::uint64_t max_candidates = kExhaustiveCap;
  std::size_t top_k = 10;
  double phase_tol = kRealTolerance;
  int cz_max_distance = 1;
  Boundary boundary = Boundary::open;  // used for CZ pair distances
  std::uint64_t seed = 1;
  int threads = 1;
  std::uint64_t shard_start = 0;
  std::uint64_t shard_end = std::numeric_limits<std::uint64_t>::max();  // clipped to the stream size

  void validate() const {
    if (top_k < 1) throw InvalidArgument("top_k must be at least 1");
    if (max_candidates < 1) throw InvalidArgument("max_candidates must be positive");
    if (angle_set.empty()) throw InvalidArgument("empty angle set");
    if (cz_max_distance < 1) throw InvalidArgument("cz_max_distance must be positive");
    if (shard_start > shard_end) throw InvalidArgument("shard start exceeds shard end");
  }
};

struct RankedProtocol {
  Protocol protocol;
  SignReport report;
  std::uint64_t candidate_index = 0;
};

struct SearchResult {
  std::vector<RankedProtocol> ranked;
  std::uint64_t n_evaluated = 0;
  std::uint64_t n_skipped_nonreal = 0;
  double wall_time = 0.0;  // seconds
  std::uint64_t shard_start = 0;
  std::uint64_t shard_end = 0;

  const RankedProtocol& best() const { return ranked.front(); }
};

// ---- candidate streams -----------------------------------------------------

/// Indexable stream of single-qubit protocols. Candidate i's angles are the
/// base-|angle_set| digits of i, site 1 (or 0 without fix_first_site) most
/// significant, so index order is lexicographic in angle_set order.
class SingleQubitStream {
 public:
  SingleQubitStream(int n_sites, const SearchConfig& config)
      : n_sites_(n_sites), angles_(config.angle_set), fixed_(config.fix_first_site ? 1 : 0) {
    if (n_sites < 1) throw InvalidArgument("n_sites must be positive");
    size_ = 1;
    const auto base = static_cast<std::uint64_t>(angles_.size());
    for (int i = fixed_; i < n_sites; ++i) {
      if (size_ > std::numeric_limits<std::uint64_t>::max() / base) {
        size_ = std::numeric_limits<std::uint64_t>::max();
        break;
      }
      size_ *= base;
    }
  }

  std::uint64_t size() const { return size_; }

  Protocol at(std::uint64_t index) const {
    Protocol p{n_sites_, std::vector<Rotation>(static_cast<std::size_t>(n_sites_), Rotation::identity), {},
               "sq#" + std::to_string(index)};
    const auto base = static_cast<std::uint64_t>(angles_.size());
    for (int i = n_sites_ - 1; i >= fixed_; --i) {
      p.angles[static_cast<std::size_t>(i)] = angles_[static_cast<std::size_t>(index % base)];
      index /= base;
    }
    return p;
  }

 private:
  int n_sites_;
  std::vector<Rotation> angles_;
  int fixed_;
  std::uint64_t size_ = 0;
};

/// All single-qubit protocols for n_sites. Streams of max_candidates or more
/// are refused.
inline std::vector<Protocol> enumerate_single_qubit_protocols(int n_sites, const SearchConfig& config) {
  config.validate();
  SingleQubitStream s(n_sites, config);
  if (s.size() >= config.max_candidates) {
    throw CandidateCapExceeded("exhaustive enumeration has " + std::to_string(s.size()) +
                                   " candidates, at or above the cap of " + std::to_string(config.max_candidates),
                               s.size());
  }
  std::vector<Protocol> out;
  out.reserve(s.size());
  for (std::uint64_t i = 0; i < s.size(); ++i) out.push_back(s.at(i));
  return out;
}

/// Perfect matchings of the sites using pairs at chain distance at most
/// max_distance. Pairs are listed (lower site, partner) in order of the
/// lower site.
inline std::vector<std::vector<SitePair>> cz_matchings(int n_sites, Boundary boundary, int max_distance,
                                                       std::uint64_t max_count = kExhaustiveCap) {
  if (n_sites % 2 != 0 || n_sites < 2) throw InvalidArgument("CZ matchings need an even number of sites");
  std::vector<std::vector<SitePair>> out;
  std::vector<SitePair> current;
  std::vector<bool> used(static_cast<std::size_t>(n_sites), false);
  std::function<void()> rec = [&] {
    int first = 0;
    while (first < n_sites && used[static_cast<std::size_t>(first)]) ++first;
    if (first == n_sites) {
      if (out.size() >= max_count) {
        throw CandidateCapExceeded("too many CZ matchings", out.size() + 1);
      }
      out.push_back(current);
      return;
    }
    used[static_cast<std::size_t>(first)] = true;
    for (int j = first + 1; j < n_sites; ++j) {
      if (used[static_cast<std::size_t>(j)] || chain_distance(first, j, n_sites, boundary) > max_distance) continue;
      used[static_cast<std::size_t>(j)] = true;
      current.emplace_back(first, j);
      rec();
      current.pop_back();
      used[static_cast<std::size_t>(j)] = false;
    }
    used[static_cast<std::size_t>(first)] = false;
  };
  rec();
  return out;
}

// ---- ranking -----------------------------------------------------------------

namespace detail {

inline long long score_key(double s) { return std::llround(s * 1e12); }

// Strict total order: higher score (to 1e-12), fewer gates, lexicographic
// angles, lexicographic CZ pairs, lower candidate index.
inline bool ranks_before(const RankedProtocol& a, const RankedProtocol& b) {
  const auto ka = score_key(a.report.sign_average), kb = score_key(b.report.sign_average);
  if (ka != kb) return ka > kb;
  const int ga = a.protocol.gate_count(), gb = b.protocol.gate_count();
  if (ga != gb) return ga < gb;
  auto angle_rank = [](Rotation r) {
    return static_cast<int>(std::find(kAllRotations.begin(), kAllRotations.end(), r) - kAllRotations.begin());
  };
  for (std::size_t i = 0; i < std::min(a.protocol.angles.size(), b.protocol.angles.size()); ++i) {
    const int ra = angle_rank(a.protocol.angles[i]), rb = angle_rank(b.protocol.angles[i]);
    if (ra != rb) return ra < rb;
  }
  if (a.protocol.cz_pairs != b.protocol.cz_pairs) return a.protocol.cz_pairs < b.protocol.cz_pairs;
  return a.candidate_index < b.candidate_index;
}

inline void keep_top(std::vector<RankedProtocol>& v, std::size_t k) {
  std::sort(v.begin(), v.end(), ranks_before);
  if (v.size() > k) v.resize(k);
}

struct Tally {
  std::vector<RankedProtocol> top;
  std::uint64_t evaluated = 0;
  std::uint64_t skipped = 0;
};

// Evaluates candidates [begin, end) of an indexed generator on `threads`
// workers; each worker keeps its own top-k, merged afterwards.
template <typename Generator>
SearchResult run_candidates(const Generator& generate, std::uint64_t begin, std::uint64_t end,
                            const SectorBasis& basis, const Eigen::MatrixXd& frame, const SearchConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const int threads = std::max(1, config.threads);
  std::vector<Tally> tallies(static_cast<std::size_t>(threads));
  auto work = [&](int w, std::uint64_t b, std::uint64_t e) {
    Tally& t = tallies[static_cast<std::size_t>(w)];
    for (std::uint64_t i = b; i < e; ++i) {
      Protocol p = generate(i);
      const auto s = protocol_sign(p, basis, frame, config.phase_tol, config.seed);
      ++t.evaluated;
      if (!s.real) {
        ++t.skipped;
        continue;
      }
      t.top.push_back({std::move(p), s.report, i});
      if (t.top.size() >= 4 * config.top_k + 64) keep_top(t.top, config.top_k);
    }
    keep_top(t.top, config.top_k);
  };
  const std::uint64_t n = end - begin;
  if (threads == 1 || n < 2) {
    work(0, begin, end);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (n + static_cast<std::uint64_t>(threads) - 1) / static_cast<std::uint64_t>(threads);
    for (int w = 0; w < threads; ++w) {
      const std::uint64_t b = begin + chunk * static_cast<std::uint64_t>(w);
      const std::uint64_t e = std::min(end, b + chunk);
      if (b < e) pool.emplace_back(work, w, b, e);
    }
  }
  SearchResult r;
  for (auto& t : tallies) {
    r.n_evaluated += t.evaluated;
    r.n_skipped_nonreal += t.skipped;
    for (auto& x : t.top) r.ranked.push_back(std::move(x));
  }
  keep_top(r.ranked, config.top_k);
  r.shard_start = begin;
  r.shard_end = end;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline Eigen::MatrixXd frame_for(std::span<const StateVector> states, const SectorBasis& basis) {
  for (const auto& s : states) require_basis(s, basis);
  return real_frame(states);
}

inline std::pair<std::uint64_t, std::uint64_t> shard_range(const SearchConfig& config, std::uint64_t size) {
  const std::uint64_t b = std::min(config.shard_start, size);
  const std::uint64_t e = std::min(config.shard_end, size);
  return {b, std::max(b, e)};
}

}  // namespace detail

/// Exhaustive single-qubit search. `states` is the ground level: one vector,
/// or an orthonormal basis of a degenerate level (scored by the best vector in
/// the transformed subspace).
inline SearchResult brute_force_search(std::span<const StateVector> states, const SectorBasis& basis,
                                       const SearchConfig& config) {
  config.validate();
  const SingleQubitStream stream(basis.n_sites(), config);
  const auto [b, e] = detail::shard_range(config, stream.size());
  if (e - b >= config.max_candidates) {
    throw CandidateCapExceeded("exhaustive search over " + std::to_string(e - b) +
                                   " candidates reaches the cap of " + std::to_string(config.max_candidates) +
                                   "; use a template search or a smaller shard",
                               e - b);
  }
  if (b == e) throw InvalidArgument("empty candidate range");
  const auto frame = detail::frame_for(states, basis);
  return detail::run_candidates([&](std::uint64_t i) { return stream.at(i); }, b, e, basis, frame, config);
}

inline SearchResult brute_force_search(const StateVector& state, const SectorBasis& basis,
                                       const SearchConfig& config) {
  return brute_force_search(std::span<const StateVector>(&state, 1), basis, config);
}

/// Single-qubit protocols whose angles repeat with the given period
/// (1, 2, 4 or 8), truncated at n_sites. The set of periodic patterns is
/// closed under cyclic shifts, so shifted variants are covered.
inline SearchResult template_search(std::span<const StateVector> states, const SectorBasis& basis, int period,
                                    const SearchConfig& config) {
  config.validate();
  if (period != 1 && period != 2 && period != 4 && period != 8) {
    throw InvalidArgument("template period must be 1, 2, 4 or 8");
  }
  const int n = basis.n_sites();
  const SingleQubitStream pattern(period, config);
  const auto [b, e] = detail::shard_range(config, pattern.size());
  if (b == e) throw InvalidArgument("empty candidate range");
  const auto frame = detail::frame_for(states, basis);
  auto generate = [&](std::uint64_t i) {
    const Protocol unit = pattern.at(i);
    Protocol p{n, {}, {}, "period" + std::to_string(period) + "#" + std::to_string(i)};
    for (int s = 0; s < n; ++s) p.angles.push_back(unit.angles[static_cast<std::size_t>(s % period)]);
    return p;
  };
  return detail::run_candidates(generate, b, e, basis, frame, config);
}

inline SearchResult template_search(const StateVector& state, const SectorBasis& basis, int period,
                                    const SearchConfig& config) {
  return template_search(std::span<const StateVector>(&state, 1), basis, period, config);
}

/// Angle layers used with CZ matchings: MPR and the two alignments of the
/// ABBA pattern.
inline std::vector<Protocol> mpr_cz_angle_layers(int n_sites) {
  return {mpr_protocol(n_sites), odd_even_protocol(n_sites, 0), odd_even_protocol(n_sites, 1)};
}

/// Candidates = {MPR, ABBA, shifted ABBA} angle layers x CZ matchings within
/// config.cz_max_distance (on config.boundary).
inline SearchResult search_mpr_plus_cz(std::span<const StateVector> states, const SectorBasis& basis,
                                       const SearchConfig& config) {
  config.validate();
  const int n = basis.n_sites();
  const auto layers = mpr_cz_angle_layers(n);
  const auto matchings = cz_matchings(n, config.boundary, config.cz_max_distance, config.max_candidates);
  const std::uint64_t size = layers.size() * matchings.size();
  if (size >= config.max_candidates) {
    throw CandidateCapExceeded("MPR+CZ candidate set exceeds the cap", size);
  }
  const auto [b, e] = detail::shard_range(config, size);
  if (b == e) throw InvalidArgument("empty candidate range");
  const auto frame = detail::frame_for(states, basis);
  auto generate = [&](std::uint64_t i) {
    Protocol p = layers[i / matchings.size()];
    p.cz_pairs = matchings[i % matchings.size()];
    p.label += "+cz#" + std::to_string(i % matchings.size());
    return p;
  };
  return detail::run_candidates(generate, b, e, basis, frame, config);
}

inline SearchResult search_mpr_plus_cz(const StateVector& state, const SectorBasis& basis,
                                       const SearchConfig& config) {
  return search_mpr_plus_cz(std::span<const StateVector>(&state, 1), basis, config);
}

/// {"shard": {"start", "end"}, "n_evaluated", "n_skipped_nonreal",
///  "results": [{protocol, sign_average, negative_fraction}]}
inline nlohmann::json to_json(const SearchResult& r) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& x : r.ranked) {
    results.push_back({{"protocol", x.protocol},
                       {"sign_average", x.report.sign_average},
                       {"negative_fraction", x.report.negative_fraction},
                       {"candidate_index", x.candidate_index}});
  }
  return {{"shard", {{"start", r.shard_start}, {"end", r.shard_end}}},
          {"n_evaluated", r.n_evaluated},
          {"n_skipped_nonreal", r.n_skipped_nonreal},
          {"wall_time_s", r.wall_time},
          {"results", results}};
}

}  // namespace signpos
