#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recomb/lattice.hpp"

namespace recomb {

/// A real function on the partitions of one ground set, indexed like its lattice.
class CoefficientVector {
 public:
  explicit CoefficientVector(std::shared_ptr<const Lattice> lattice);
  CoefficientVector(std::shared_ptr<const Lattice> lattice, std::vector<double> values);

  /// δ(·, 1̲): the initial condition of every coefficient system.
  static CoefficientVector top(GroundSet ground);
  static CoefficientVector point(std::shared_ptr<const Lattice> lattice, Index at);

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
  GroundSet ground() const { return lattice_->ground(); }
  std::size_t size() const { return values_.size(); }

  double operator[](Index i) const { return values_[i]; }
  double& operator[](Index i) { return values_[i]; }
  double operator()(const Partition& p) const { return values_[lattice_->index_of(p)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double sum() const;
  double l1_norm() const;
  bool is_nonnegative(double tol = 0.0) const;
  /// Entries ≥ -tol and sum within tol of 1.
  bool is_probability(double tol = 1e-12) const;

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> values_;
};

/// max_A |x(A) - y(A)|
double max_abs_difference(const CoefficientVector& x, const CoefficientVector& y);

/// Nonnegative recombination rates on the partitions of a ground set, with
/// the induced rates of every subsystem cached on demand.
class RateSystem {
 public:
  RateSystem(std::shared_ptr<const Lattice> lattice, std::vector<double> rates);
  /// Unlisted partitions get rate 0; repeated keys are rejected.
  RateSystem(GroundSet ground, std::span<const std::pair<Partition, double>> rates);

  RateSystem(const RateSystem& other);
  RateSystem& operator=(const RateSystem& other);
  RateSystem(RateSystem&&) noexcept;
  RateSystem& operator=(RateSystem&&) noexcept;
  ~RateSystem();

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
  GroundSet ground() const { return lattice_->ground(); }

  double rate(Index i) const { return rates_[i]; }
  double rate(const Partition& p) const { return rates_[lattice_->index_of(p)]; }
  std::span<const double> rates() const { return rates_; }
  /// ϱ_Σ, identical on every subsystem.
  double total() const { return total_; }

  /// ϱ^U(A) = Σ_{D|_U = A} ϱ(D). Cached; the reference stays valid for the
  /// lifetime of this object.
  const RateSystem& marginal(GroundSet u) const;

 private:
  struct Cache {
    std::mutex mutex;
    std::unordered_map<SiteMask, std::unique_ptr<const RateSystem>> by_mask;
  };

  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> rates_;
  double total_ = 0.0;
  std::unique_ptr<Cache> cache_;
};

RateSystem marginal_rates(const RateSystem& rates, GroundSet u);

/// q^U(A) = Σ_{D|_U = A} q(D)
CoefficientVector marginal_vector(const CoefficientVector& q, GroundSet u);

}  // namespace recomb
