#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "recomb/coefficients.hpp"
#include "recomb/partition.hpp"

namespace recomb {

/// X = X_1 × ... × X_n with finite alphabets. States are numbered row-major
/// over ascending site labels, so the lowest site is the slowest digit.
class TypeSpace {
 public:
  TypeSpace(GroundSet sites, std::vector<int> alphabet_sizes);
  /// n sites, each with alphabet size `letters`.
  static TypeSpace uniform(int n, int letters);

  GroundSet sites() const { return sites_; }
  std::span<const int> alphabet_sizes() const { return sizes_; }
  int alphabet_size(int site) const;
  std::size_t state_count() const { return count_; }
  /// Digits of a state, one per site in ascending order.
  std::vector<int> decode(std::size_t state) const;
  std::size_t encode(std::span<const int> digits) const;

  /// The factor space over u ⊆ sites.
  TypeSpace sub(GroundSet u) const;

  friend bool operator==(const TypeSpace&, const TypeSpace&) = default;

 private:
  GroundSet sites_;
  std::vector<int> sizes_;
  std::size_t count_;
};

/// A finite measure stored as a dense tensor over a TypeSpace.
class Measure {
 public:
  explicit Measure(TypeSpace space);
  Measure(TypeSpace space, std::vector<double> weights);

  static Measure uniform(TypeSpace space);
  /// Outer product of per-site weight vectors (no normalization).
  static Measure product(TypeSpace space, const std::vector<std::vector<double>>& factors);

  const TypeSpace& space() const { return space_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  double& operator[](std::size_t i) { return weights_[i]; }

  bool is_nonnegative() const;

 private:
  TypeSpace space_;
  std::vector<double> weights_;
};

/// Sum of entries (total variation norm for nonnegative measures).
double norm(const Measure& nu);
/// Σ |x - y| over states.
double l1_distance(const Measure& x, const Measure& y);

/// π_U . ν: marginal on the sites of u.
Measure project(const Measure& nu, GroundSet u);

/// R_A(ν) = ‖ν‖^{1-|A|} ⊗_i π_{A_i}.ν, with R_A(0) = 0.
Measure recombinator(const Partition& a, const Measure& nu);

namespace detail {
/// recombinator without the sign check, for integrator stages that may
/// carry rounding-level negative entries.
Measure recombinator_unchecked(const Partition& a, const Measure& nu);
}  // namespace detail

struct InvariantPartitions {
  std::vector<Partition> fixed;  // H_ν
  Partition meet;                // U_ν = ⋀ H_ν
};

/// Partitions whose recombinator fixes ν up to eps·‖ν‖ in L1.
InvariantPartitions invariant_partition_set(const Measure& nu, double eps = 1e-10);

/// Σ_C coeffs(C) R_C(ν_0)
Measure mixture(const CoefficientVector& coeffs, const Measure& nu0);

/// CSV with columns x<site>... (0-based letters) and weight, one row per state.
void write_measure_csv(std::ostream& out, const Measure& nu);
/// States missing from the file get weight 0; duplicates are rejected.
Measure read_measure_csv(std::istream& in, const TypeSpace& space);

}  // namespace recomb
