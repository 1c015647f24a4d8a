#include "recomb/partitioning.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "recomb/closed_form.hpp"
#include "recomb/dynamics.hpp"
#include "recomb/errors.hpp"
#include "recomb/reference.hpp"

namespace recomb {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomEngine stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return RandomEngine(splitmix64(splitmix64(seed) + stream));
}

double uniform_open01(RandomEngine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

PartitioningProcess::PartitioningProcess(const RateSystem& rates) : rates_(&rates), site_rank_(kMaxSites, -1) {
  const SiteMask S = rates.ground().mask();
  int k = 0;
  for (int bit = 0; bit < kMaxSites; ++bit)
    if ((S >> bit) & 1U) site_rank_[static_cast<std::size_t>(bit)] = k++;
  catalogs_.resize(std::size_t{1} << k);
  for (SiteMask m = S; m; m = (m - 1) & S) {
    const GroundSet g(m);
    const RateSystem& r = rates.marginal(g);
    Catalog cat{r.lattice_ptr(), {}, {}};
    double run = 0.0;
    for (Index s = 1; s < r.lattice().size(); ++s) {
      if (r.rate(s) <= 0.0) continue;
      run += r.rate(s);
      cat.targets.push_back(s);
      cat.cumulative.push_back(run);
    }
    std::size_t key = 0;
    for (SiteMask x = m; x; x &= x - 1) key |= std::size_t{1} << site_rank_[static_cast<std::size_t>(std::countr_zero(x))];
    catalogs_[key] = std::move(cat);
  }
}

const PartitioningProcess::Catalog& PartitioningProcess::catalog(SiteMask block) const {
  std::size_t key = 0;
  for (SiteMask x = block; x; x &= x - 1) key |= std::size_t{1} << site_rank_[static_cast<std::size_t>(std::countr_zero(x))];
  return catalogs_[key];
}

double PartitioningProcess::exit_rate(const Partition& c) const {
  if (c.ground() != ground()) throw DomainError("exit_rate: partition is not on the process ground set");
  double s = 0.0;
  for (SiteMask b : c.blocks()) s += catalog(b).total();
  return s;
}

namespace {

// Replaces one block of `c`, chosen in proportion to its exit rate, by a
// refinement drawn from that block's catalog.
template <class CatalogFn>
Partition jump(const Partition& c, double total, RandomEngine& rng, CatalogFn&& catalog) {
  double x = uniform_open01(rng) * total;
  std::size_t chosen = c.block_count();
  for (std::size_t i = 0; i < c.block_count(); ++i) {
    const double w = catalog(c.block(i)).total();
    if (w <= 0.0) continue;
    chosen = i;
    if (x < w) break;
    x -= w;
  }
  const auto& cat = catalog(c.block(chosen));
  const double y = uniform_open01(rng) * cat.total();
  auto it = std::upper_bound(cat.cumulative.begin(), cat.cumulative.end(), y);
  const std::size_t pick = std::min<std::size_t>(static_cast<std::size_t>(it - cat.cumulative.begin()),
                                                 cat.targets.size() - 1);
  const Partition& sigma = cat.lattice->at(cat.targets[pick]);
  std::vector<SiteMask> blocks;
  blocks.reserve(c.block_count() + sigma.block_count());
  for (std::size_t i = 0; i < c.block_count(); ++i)
    if (i != chosen) blocks.push_back(c.block(i));
  blocks.insert(blocks.end(), sigma.blocks().begin(), sigma.blocks().end());
  return Partition(std::move(blocks));
}

}  // namespace

ProcessState PartitioningProcess::step(const ProcessState& state, RandomEngine& rng) const {
  const double total = exit_rate(state.current);
  if (!(total > 0.0)) throw DomainError(fmt::format("step: {} is absorbing", state.current.to_string()));
  const double dt = -std::log(uniform_open01(rng)) / total;
  auto cat = [this](SiteMask b) -> const Catalog& { return catalog(b); };
  return {jump(state.current, total, rng, cat), state.time + dt};
}

Partition PartitioningProcess::simulate_from(const Partition& start, double t_end, RandomEngine& rng) const {
  if (!(t_end >= 0.0)) throw DomainError("simulate: end time must be nonnegative");
  auto cat = [this](SiteMask b) -> const Catalog& { return catalog(b); };
  Partition cur = start;
  double t = 0.0;
  while (true) {
    const double total = exit_rate(cur);
    if (!(total > 0.0)) break;
    t += -std::log(uniform_open01(rng)) / total;
    if (t > t_end) break;
    cur = jump(cur, total, rng, cat);
  }
  return cur;
}

Partition PartitioningProcess::simulate_path(double t_end, RandomEngine& rng) const {
  return simulate_from(Partition::coarsest(ground()), t_end, rng);
}

double exit_rate(const RateSystem& rates, const Partition& c) { return PartitioningProcess(rates).exit_rate(c); }

ProcessState step(const RateSystem& rates, const ProcessState& state, RandomEngine& rng) {
  return PartitioningProcess(rates).step(state, rng);
}

Partition simulate_path(const RateSystem& rates, double t_end, RandomEngine& rng) {
  return PartitioningProcess(rates).simulate_path(t_end, rng);
}

EmpiricalDistribution::EmpiricalDistribution(std::shared_ptr<const Lattice> lattice)
    : lattice_(std::move(lattice)), counts_(lattice_->size(), 0) {}

void EmpiricalDistribution::add(Index i, std::uint64_t n) {
  counts_.at(i) += n;
  total_ += n;
}

void EmpiricalDistribution::merge(const EmpiricalDistribution& other) {
  if (lattice_ != other.lattice_) throw DomainError("merge: distributions live on different lattices");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

CoefficientVector EmpiricalDistribution::frequencies() const {
  CoefficientVector f(lattice_);
  if (total_ == 0) return f;
  for (std::size_t i = 0; i < counts_.size(); ++i)
    f[static_cast<Index>(i)] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  return f;
}

EmpiricalDistribution estimate_distribution(const RateSystem& rates, double t, std::uint64_t n_samples,
                                            std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("estimate_distribution: need at least one sample");
  if (!(t >= 0.0)) throw DomainError("estimate_distribution: time must be nonnegative");
  const PartitioningProcess proc(rates);
  auto lat = rates.lattice_ptr();
  EmpiricalDistribution result(lat);
  const auto N = static_cast<std::int64_t>(n_samples);
#pragma omp parallel
  {
    EmpiricalDistribution local(lat);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < N; ++i) {
      RandomEngine rng = stream_engine(seed, static_cast<std::uint64_t>(i));
      local.add(lat->index_of(proc.simulate_path(t, rng)));
    }
#pragma omp critical
    result.merge(local);
  }
  return result;
}

TransitionCheck transition_probability_product_check(const RateSystem& rates, const Partition& c,
                                                     const Partition& d, double t, std::uint64_t n_samples,
                                                     std::uint64_t seed) {
  if (c.ground() != rates.ground() || d.ground() != rates.ground())
    throw DomainError("transition check: partitions are not on the rate ground set");
  if (!is_refinement(d, c))
    throw DomainError(fmt::format("transition check: {} does not refine {}, probability is 0", d.to_string(),
                                  c.to_string()));
  if (n_samples < 1) throw DomainError("transition check: need at least one sample");

  const PartitioningProcess proc(rates);
  std::uint64_t hits = 0;
  const auto N = static_cast<std::int64_t>(n_samples);
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (std::int64_t i = 0; i < N; ++i) {
    RandomEngine rng = stream_engine(seed, static_cast<std::uint64_t>(i));
    if (proc.simulate_from(c, t, rng) == d) ++hits;
  }

  TransitionCheck out{};
  out.empirical = static_cast<double>(hits) / static_cast<double>(n_samples);
  out.predicted = 1.0;
  out.closed_form = true;
  std::optional<ClosedFormSolution> sol;
  try {
    sol.emplace(build_closed_form(rates));
  } catch (const DegeneracyError&) {
    out.closed_form = false;
  }
  for (SiteMask blk : c.blocks()) {
    if (site_count(blk) == 1) continue;
    const GroundSet g(blk);
    const Partition target = restrict(d, g);
    if (sol) {
      out.predicted *= sol->evaluate(g, t)(target);
    } else {
      const RateSystem& r = rates.marginal(g);
      const double grid[] = {0.0, t};
      auto traj = integrate_coefficients(r, CoefficientVector::top(g), std::span(grid, t > 0.0 ? 2 : 1),
                                         default_step(r));
      out.predicted *= traj.states.back()(target);
    }
  }
  const double p = std::clamp(out.predicted, 0.0, 1.0);
  out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  const double diff = out.empirical - out.predicted;
  out.z = out.std_error > 0.0 ? diff / out.std_error : (std::abs(diff) < 1e-12 ? 0.0 : std::copysign(INFINITY, diff));
  return out;
}

double tv_distance(const CoefficientVector& p, const CoefficientVector& q) {
  if (p.ground() != q.ground()) throw DomainError("tv_distance: ground sets differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p.values()[i] - q.values()[i]);
  return 0.5 * s;
}

namespace reference {

EmpiricalDistribution estimate_distribution(const RateSystem& rates, double t, std::uint64_t n_samples,
                                            std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("estimate_distribution: need at least one sample");
  const PartitioningProcess proc(rates);
  EmpiricalDistribution result(rates.lattice_ptr());
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    RandomEngine rng = stream_engine(seed, i);
    result.add(rates.lattice().index_of(proc.simulate_path(t, rng)));
  }
  return result;
}

}  // namespace reference

}  // namespace recomb
