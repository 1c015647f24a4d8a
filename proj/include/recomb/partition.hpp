#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recomb {

/// Bit i-1 is set when site i belongs to the set. Sites are labelled 1..32.
using SiteMask = std::uint32_t;

inline constexpr int kMaxSites = 32;

inline int lowest_site(SiteMask m) { return std::countr_zero(m) + 1; }
inline int site_count(SiteMask m) { return std::popcount(m); }

/// A nonempty set of site labels. Sub-ground-sets keep their original labels.
class GroundSet {
 public:
  explicit GroundSet(SiteMask mask);

  /// {1, ..., n}
  static GroundSet first(int n);
  /// Strictly increasing labels in 1..32.
  static GroundSet from_sites(std::span<const int> sites);
  /// Comma separated labels, e.g. "1,3,4".
  static GroundSet parse(std::string_view text);

  SiteMask mask() const { return mask_; }
  int size() const { return site_count(mask_); }
  bool contains(int site) const;
  bool is_subset_of(GroundSet other) const { return (mask_ & ~other.mask_) == 0; }
  std::vector<int> sites() const;
  std::string to_string() const;

  friend bool operator==(GroundSet, GroundSet) = default;
  friend auto operator<=>(GroundSet, GroundSet) = default;

 private:
  SiteMask mask_;
};

/// A set partition in canonical form: blocks are bitmasks ordered by their
/// smallest site, so structural equality is partition equality.
class Partition {
 public:
  /// Blocks must be nonempty and pairwise disjoint; order is irrelevant.
  explicit Partition(std::vector<SiteMask> blocks);

  /// 0̲: all singletons.
  static Partition finest(GroundSet ground);
  /// 1̲: a single block.
  static Partition coarsest(GroundSet ground);

  /// Text form `1,2|3,4`. Whitespace is ignored. The ground set is the union
  /// of the blocks.
  static Partition parse(std::string_view text);
  /// As above, but the blocks must cover exactly `ground`.
  static Partition parse(std::string_view text, GroundSet ground);

  GroundSet ground() const { return GroundSet(ground_); }
  std::size_t block_count() const { return blocks_.size(); }
  std::span<const SiteMask> blocks() const { return blocks_; }
  SiteMask block(std::size_t i) const { return blocks_[i]; }
  /// Mask of the block holding `site`, or 0 when the site is not covered.
  SiteMask block_containing(int site) const;

  bool is_finest() const { return blocks_.size() == static_cast<std::size_t>(site_count(ground_)); }
  bool is_coarsest() const { return blocks_.size() == 1; }

  std::string to_string() const;

  friend bool operator==(const Partition& a, const Partition& b) { return a.blocks_ == b.blocks_; }
  friend std::strong_ordering operator<=>(const Partition& a, const Partition& b) {
    return a.blocks_ <=> b.blocks_;
  }

 private:
  struct Canonical {};
  Partition(Canonical, std::vector<SiteMask> blocks, SiteMask ground)
      : blocks_(std::move(blocks)), ground_(ground) {}

  std::vector<SiteMask> blocks_;
  SiteMask ground_ = 0;

  friend Partition restrict(const Partition&, GroundSet);
  friend Partition meet(const Partition&, const Partition&);
};

/// a ≼ b: every block of a lies inside some block of b.
bool is_refinement(const Partition& a, const Partition& b);
/// Common refinement a ∧ b.
Partition meet(const Partition& a, const Partition& b);
/// Iterated meet; the empty family gives 1̲ on `ground`.
Partition meet_of_set(std::span<const Partition> partitions, GroundSet ground);
/// a|_u: nonempty intersections of the blocks with u.
Partition restrict(const Partition& a, GroundSet u);
/// Disjoint union of partitions on pairwise disjoint ground sets.
Partition join_disjoint(std::span<const Partition> parts);

/// 2^{n-1} - 1
std::uint64_t count_two_block(int n);

struct PartitionHash {
  std::size_t operator()(const Partition& p) const noexcept;
};

}  // namespace recomb

template <>
struct std::hash<recomb::Partition> : recomb::PartitionHash {};
