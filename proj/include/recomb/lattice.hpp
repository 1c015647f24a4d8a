#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "recomb/partition.hpp"

namespace recomb {

/// Largest ground set the lattice will enumerate (B(10) = 115975).
inline constexpr int kMaxLatticeSites = 10;

using Index = std::uint32_t;

/// The partition lattice of one ground set. Elements are held in
/// restricted-growth-string order, which puts 1̲ first and 0̲ last; a strict
/// refinement always has a larger index than the partition it refines.
///
/// Instances are immutable apart from lazily built, internally synchronized
/// tables, and are shared through `Lattice::of`.
class Lattice {
 public:
  static std::shared_ptr<const Lattice> of(GroundSet ground);

  GroundSet ground() const { return ground_; }
  std::size_t size() const { return elements_.size(); }
  const Partition& at(Index i) const { return elements_[i]; }
  std::span<const Partition> elements() const { return elements_; }

  /// Position of `p`; throws if `p` lives on another ground set.
  Index index_of(const Partition& p) const;

  Index top() const { return 0; }
  Index bottom() const { return static_cast<Index>(size() - 1); }
  std::size_t block_count(Index i) const { return elements_[i].block_count(); }

  /// Indices j with i ≼ j, ascending (so i itself is last).
  std::span<const Index> upper(Index i) const;
  /// Indices j with j ≼ i, ascending (so i itself is first).
  std::span<const Index> lower(Index i) const;
  bool leq(Index i, Index j) const;
  /// Offset of the row of i in the flattened up-set table.
  std::size_t upper_offset(Index i) const;
  std::size_t pair_count() const;
  /// Position of j inside upper(i), or -1 when i ⋠ j.
  std::ptrdiff_t upper_position(Index i, Index j) const;

  /// For each element A of this lattice, the index of A|_u in Lattice::of(u).
  std::span<const Index> restriction_map(GroundSet u) const;

  /// μ(i, ·) aligned with upper(i).
  std::span<const std::int64_t> mobius_row(Index i) const;
  std::int64_t mobius(Index i, Index j) const;

  Lattice(const Lattice&) = delete;
  Lattice& operator=(const Lattice&) = delete;

 private:
  explicit Lattice(GroundSet ground);
  Index rank_rgs(std::span<const std::uint8_t> rgs) const;
  void build_upper() const;
  void build_lower() const;

  GroundSet ground_;
  int k_;
  std::vector<Partition> elements_;
  std::vector<std::uint8_t> rgs_;  // k_ labels per element
  std::vector<std::uint64_t> completions_;  // (k_+1)^2 table for ranking

  mutable std::once_flag upper_once_, lower_once_;
  mutable std::vector<std::size_t> up_off_, down_off_;
  mutable std::vector<Index> up_, down_;

  mutable std::unique_ptr<std::once_flag[]> mobius_once_;
  mutable std::vector<std::vector<std::int64_t>> mobius_rows_;

  mutable std::mutex restrict_mutex_;
  mutable std::unordered_map<SiteMask, std::unique_ptr<const std::vector<Index>>> restrict_maps_;
};

/// All partitions of `ground` in restricted-growth-string order.
std::vector<Partition> enumerate_partitions(GroundSet ground);

/// μ(a, b), zero unless a ≼ b.
std::int64_t mobius(const Partition& a, const Partition& b);

/// A real-valued element of the incidence algebra, stored densely on the
/// pairs a ≼ b of one lattice.
class IncidenceElement {
 public:
  explicit IncidenceElement(std::shared_ptr<const Lattice> lattice);

  static IncidenceElement delta(std::shared_ptr<const Lattice> lattice);
  static IncidenceElement zeta(std::shared_ptr<const Lattice> lattice);
  static IncidenceElement mobius(std::shared_ptr<const Lattice> lattice);

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
  GroundSet ground() const { return lattice_->ground(); }

  double operator()(Index a, Index b) const;
  double operator()(const Partition& a, const Partition& b) const;
  /// Throws unless a ≼ b.
  void set(Index a, Index b, double v);

  /// Values of row a aligned with lattice().upper(a).
  std::span<const double> row(Index a) const;
  std::span<double> row(Index a);

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> values_;
};

/// (x ∗ y)(a, b) = Σ_{a ≼ c ≼ b} x(a, c) y(c, b)
IncidenceElement convolve(const IncidenceElement& x, const IncidenceElement& y);

}  // namespace recomb
