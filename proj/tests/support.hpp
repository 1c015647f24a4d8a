#pragma once

// Generators and brute-force oracles shared by the test executables. The
// oracles deliberately avoid the library's lattice machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "recomb/recomb.hpp"

namespace testing {

using namespace recomb;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// B(0..n) from B(n+1) = Σ_k C(n,k) B(k).
inline std::vector<std::uint64_t> bell_numbers(int n) {
  std::vector<std::uint64_t> b{1};
  for (int m = 0; m < n; ++m) {
    std::uint64_t s = 0, c = 1;
    for (int k = 0; k <= m; ++k) {
      s += c * b[static_cast<std::size_t>(k)];
      c = c * static_cast<std::uint64_t>(m - k) / static_cast<std::uint64_t>(k + 1);
    }
    b.push_back(s);
  }
  return b;
}

/// All set partitions of `sites`, built by inserting one site at a time.
inline std::vector<std::vector<SiteMask>> brute_partitions(const std::vector<int>& sites) {
  std::vector<std::vector<SiteMask>> out{{}};
  for (int s : sites) {
    const SiteMask bit = SiteMask{1} << (s - 1);
    std::vector<std::vector<SiteMask>> next;
    for (const auto& p : out) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        auto q = p;
        q[i] |= bit;
        next.push_back(std::move(q));
      }
      auto q = p;
      q.push_back(bit);
      next.push_back(std::move(q));
    }
    out = std::move(next);
  }
  return out;
}

/// Every block of a sits inside a block of b.
inline bool brute_refines(std::span<const SiteMask> a, std::span<const SiteMask> b) {
  return std::all_of(a.begin(), a.end(), [&](SiteMask x) {
    return std::any_of(b.begin(), b.end(), [&](SiteMask y) { return (x & ~y) == 0; });
  });
}

/// Dense Gauss-Jordan inverse.
inline std::vector<std::vector<double>> invert(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = m[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      m[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m[r][c] == 0.0) continue;
      const double f = m[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        m[r][k] -= f * m[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

/// Random partition of `ground`: each site joins an existing block or opens one.
inline Partition random_partition(GroundSet ground, Rng& rng) {
  std::vector<SiteMask> blocks;
  for (int s : ground.sites()) {
    std::uniform_int_distribution<std::size_t> pick(0, blocks.size());
    const std::size_t i = pick(rng);
    const SiteMask bit = SiteMask{1} << (s - 1);
    if (i == blocks.size()) blocks.push_back(bit);
    else blocks[i] |= bit;
  }
  return Partition(std::move(blocks));
}

/// Rates uniform on [lo, hi) for every partition (1̲ included).
inline RateSystem random_rates(GroundSet ground, Rng& rng, double lo = 0.05, double hi = 1.0) {
  auto lat = Lattice::of(ground);
  std::vector<double> r(lat->size());
  for (double& x : r) x = uniform(rng, lo, hi);
  return RateSystem(lat, std::move(r));
}

/// Random rates that pass the degeneracy check.
inline RateSystem random_generic_rates(GroundSet ground, Rng& rng) {
  while (true) {
    RateSystem r = random_rates(ground, rng);
    if (detect_degeneracy(r).generic()) return r;
  }
}

/// Rates only on the ordered two-block partitions {1..k}|{k+1..n}.
inline RateSystem single_crossover_rates(int n, Rng& rng) {
  const GroundSet g = GroundSet::first(n);
  std::vector<std::pair<Partition, double>> entries;
  for (int k = 1; k < n; ++k) {
    const SiteMask left = (SiteMask{1} << k) - 1;
    entries.emplace_back(Partition({left, g.mask() & ~left}), uniform(rng, 0.1, 1.0));
  }
  return RateSystem(g, entries);
}

inline Measure random_measure(const TypeSpace& space, Rng& rng, bool normalize = true) {
  Measure m(space);
  double s = 0.0;
  for (double& w : m.weights()) s += (w = uniform(rng));
  if (normalize)
    for (double& w : m.weights()) w /= s;
  return m;
}

/// a^lin_t from the sum over sets 𝔾 of partitions with positive rate.
inline CoefficientVector linear_by_subsets(const RateSystem& rates, double t) {
  const auto& lat = rates.lattice();
  std::vector<Index> support;
  for (Index i = 0; i < lat.size(); ++i)
    if (rates.rate(i) > 0.0) support.push_back(i);
  CoefficientVector out(rates.lattice_ptr());
  const std::size_t k = support.size();
  for (std::uint64_t g = 0; g < (std::uint64_t{1} << k); ++g) {
    std::vector<Partition> chosen;
    double w = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(-rates.rate(support[j]) * t);
      if ((g >> j) & 1U) {
        w *= 1.0 - e;
        chosen.push_back(lat.at(support[j]));
      } else {
        w *= e;
      }
    }
    out[lat.index_of(meet_of_set(chosen, lat.ground()))] += w;
  }
  return out;
}

/// Marginal of ν on the sites in `block`, evaluated at the letters of x, by
/// summing over every state.
inline double brute_marginal(const Measure& nu, SiteMask block, const std::vector<int>& x) {
  const auto& space = nu.space();
  const auto sites = space.sites().sites();
  double s = 0.0;
  for (std::size_t y = 0; y < space.state_count(); ++y) {
    const auto d = space.decode(y);
    bool match = true;
    for (std::size_t p = 0; p < sites.size() && match; ++p)
      if ((block >> (sites[p] - 1)) & 1U) match = d[p] == x[p];
    if (match) s += nu[y];
  }
  return s;
}

/// R_A(ν) straight from the definition.
inline Measure brute_recombinator(const Partition& a, const Measure& nu) {
  const double total = norm(nu);
  Measure out(nu.space());
  if (total == 0.0) return out;
  for (std::size_t x = 0; x < nu.space().state_count(); ++x) {
    const auto d = nu.space().decode(x);
    double w = std::pow(total, 1.0 - static_cast<double>(a.block_count()));
    for (SiteMask b : a.blocks()) w *= brute_marginal(nu, b, d);
    out[x] = w;
  }
  return out;
}

/// γ(q; A, B) straight from the definition.
inline double brute_gamma(const CoefficientVector& q, const Partition& a, const Partition& b) {
  if (!is_refinement(a, b)) return 0.0;
  const double n1 = q.l1_norm();
  if (n1 == 0.0) return 0.0;
  const auto& lat = q.lattice();
  double g = std::pow(n1, 1.0 - static_cast<double>(b.block_count()));
  for (SiteMask blk : b.blocks()) {
    const GroundSet bi(blk);
    const Partition target = restrict(a, bi);
    double s = 0.0;
    for (Index c = 0; c < lat.size(); ++c)
      if (restrict(lat.at(c), bi) == target) s += q[c];
    g *= s;
  }
  return g;
}

inline double max_abs(std::span<const double> x, std::span<const double> y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

/// Calls f(u) for every nonempty subset u of `ground`.
inline void for_each_subset(GroundSet ground, const std::function<void(GroundSet)>& f) {
  const SiteMask s = ground.mask();
  for (SiteMask m = s; m; m = (m - 1) & s) f(GroundSet(m));
}

}  // namespace testing
