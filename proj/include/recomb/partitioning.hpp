#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "recomb/coefficients.hpp"

namespace recomb {

using RandomEngine = std::mt19937_64;

/// Recorded in output metadata next to the seed.
inline constexpr std::string_view kGeneratorName = "mt19937_64+splitmix64-stream";

std::uint64_t splitmix64(std::uint64_t x);
/// Independent engine for replicate `stream` of a run seeded with `seed`.
RandomEngine stream_engine(std::uint64_t seed, std::uint64_t stream);
/// Uniform on the open interval (0, 1) from 53 random bits.
double uniform_open01(RandomEngine& rng);

struct ProcessState {
  Partition current;
  double time = 0.0;
};

/// The partitioning process on ℙ(S): each block C_i of the current state is
/// replaced by σ ∈ ℙ(C_i) ∖ {1̲} at rate ϱ^{C_i}(σ), independently of the
/// other blocks. Per-block refinement catalogs are built once.
class PartitioningProcess {
 public:
  explicit PartitioningProcess(const RateSystem& rates);

  const RateSystem& rates() const { return *rates_; }
  GroundSet ground() const { return rates_->ground(); }

  /// Total rate of leaving c, i.e. Σ_i ψ^{C_i}(1̲).
  double exit_rate(const Partition& c) const;
  /// One jump. Throws when c is absorbing.
  ProcessState step(const ProcessState& state, RandomEngine& rng) const;
  /// State at t_end, starting from `start` at time 0.
  Partition simulate_from(const Partition& start, double t_end, RandomEngine& rng) const;
  /// State at t_end, starting from 1̲.
  Partition simulate_path(double t_end, RandomEngine& rng) const;

 private:
  struct Catalog {
    std::shared_ptr<const Lattice> lattice;
    std::vector<Index> targets;       // σ ≠ 1̲ with positive rate
    std::vector<double> cumulative;   // running sums of their rates
    double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
  };
  const Catalog& catalog(SiteMask block) const;

  const RateSystem* rates_;
  std::vector<Catalog> catalogs_;  // indexed by compressed sub-mask of S
  std::vector<int> site_rank_;     // bit position in S -> compressed bit
};

double exit_rate(const RateSystem& rates, const Partition& c);
ProcessState step(const RateSystem& rates, const ProcessState& state, RandomEngine& rng);
Partition simulate_path(const RateSystem& rates, double t_end, RandomEngine& rng);

/// Counts of sampled partitions, indexed like the lattice of the ground set.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::shared_ptr<const Lattice> lattice);

  const Lattice& lattice() const { return *lattice_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::uint64_t total() const { return total_; }

  void add(Index i, std::uint64_t n = 1);
  void merge(const EmpiricalDistribution& other);
  CoefficientVector frequencies() const;

  friend bool operator==(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    return a.lattice_ == b.lattice_ && a.counts_ == b.counts_;
  }

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// n_samples independent paths from 1̲ up to time t; replicate i uses
/// stream_engine(seed, i), so results do not depend on the thread count.
EmpiricalDistribution estimate_distribution(const RateSystem& rates, double t, std::uint64_t n_samples,
                                            std::uint64_t seed);

struct TransitionCheck {
  double empirical;
  double predicted;
  double std_error;
  double z;
  bool closed_form;  // false when the prediction came from numerical integration
};

/// Empirical P_t(c, d) from paths started in c, against the product of
/// per-block probabilities Π_i a^{C_i}_t(d|_{C_i}).
TransitionCheck transition_probability_product_check(const RateSystem& rates, const Partition& c,
                                                     const Partition& d, double t, std::uint64_t n_samples,
                                                     std::uint64_t seed);

/// Total-variation distance ½ Σ |p - q|.
double tv_distance(const CoefficientVector& p, const CoefficientVector& q);

}  // namespace recomb
