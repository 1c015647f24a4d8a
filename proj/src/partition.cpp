#include "recomb/partition.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "recomb/errors.hpp"

namespace recomb {

namespace {

bool by_lowest_site(SiteMask a, SiteMask b) { return std::countr_zero(a) < std::countr_zero(b); }

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

int parse_site(std::string_view tok, std::string_view whole) {
  tok = trim(tok);
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
    throw DomainError(fmt::format("invalid site label '{}' in '{}'", tok, whole));
  if (v < 1 || v > kMaxSites)
    throw DomainError(fmt::format("site label {} out of range 1..{} in '{}'", v, kMaxSites, whole));
  return v;
}

SiteMask parse_site_list(std::string_view text, std::string_view whole) {
  SiteMask m = 0;
  std::size_t start = 0;
  while (true) {
    auto comma = text.find(',', start);
    auto tok = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    int s = parse_site(tok, whole);
    SiteMask bit = SiteMask{1} << (s - 1);
    if (m & bit) throw DomainError(fmt::format("duplicate site {} in '{}'", s, whole));
    m |= bit;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return m;
}

std::string mask_to_string(SiteMask m) {
  std::string out;
  while (m) {
    if (!out.empty()) out += ',';
    out += std::to_string(lowest_site(m));
    m &= m - 1;
  }
  return out;
}

}  // namespace

GroundSet::GroundSet(SiteMask mask) : mask_(mask) {
  if (mask == 0) throw DomainError("ground set must be nonempty");
}

GroundSet GroundSet::first(int n) {
  if (n < 1 || n > kMaxSites) throw DomainError(fmt::format("site count {} out of range 1..{}", n, kMaxSites));
  return GroundSet(n == 32 ? ~SiteMask{0} : (SiteMask{1} << n) - 1);
}

GroundSet GroundSet::from_sites(std::span<const int> sites) {
  SiteMask m = 0;
  int prev = 0;
  for (int s : sites) {
    if (s <= prev || s > kMaxSites) throw DomainError("site labels must be strictly increasing within 1..32");
    m |= SiteMask{1} << (s - 1);
    prev = s;
  }
  return GroundSet(m);
}

GroundSet GroundSet::parse(std::string_view text) {
  auto t = trim(text);
  if (t.empty()) throw DomainError("ground set must be nonempty");
  return GroundSet(parse_site_list(t, text));
}

bool GroundSet::contains(int site) const {
  return site >= 1 && site <= kMaxSites && (mask_ >> (site - 1)) & 1U;
}

std::vector<int> GroundSet::sites() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (SiteMask m = mask_; m; m &= m - 1) out.push_back(lowest_site(m));
  return out;
}

std::string GroundSet::to_string() const { return mask_to_string(mask_); }

Partition::Partition(std::vector<SiteMask> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw DomainError("partition needs at least one block");
  for (SiteMask b : blocks_) {
    if (b == 0) throw DomainError("partition blocks must be nonempty");
    if (ground_ & b) throw DomainError("partition blocks must be pairwise disjoint");
    ground_ |= b;
  }
  std::sort(blocks_.begin(), blocks_.end(), by_lowest_site);
}

Partition Partition::finest(GroundSet ground) {
  std::vector<SiteMask> blocks;
  for (SiteMask m = ground.mask(); m; m &= m - 1) blocks.push_back(m & (~m + 1));
  return Partition(Canonical{}, std::move(blocks), ground.mask());
}

Partition Partition::coarsest(GroundSet ground) {
  return Partition(Canonical{}, {ground.mask()}, ground.mask());
}

Partition Partition::parse(std::string_view text) {
  std::vector<SiteMask> blocks;
  std::size_t start = 0;
  SiteMask seen = 0;
  while (true) {
    auto bar = text.find('|', start);
    auto piece = text.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
    if (trim(piece).empty()) throw DomainError(fmt::format("empty block in partition '{}'", text));
    SiteMask b = parse_site_list(piece, text);
    if (seen & b) throw DomainError(fmt::format("site repeated across blocks in '{}'", text));
    seen |= b;
    blocks.push_back(b);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return Partition(std::move(blocks));
}

Partition Partition::parse(std::string_view text, GroundSet ground) {
  Partition p = parse(text);
  if (p.ground_ != ground.mask())
    throw DomainError(fmt::format("partition '{}' does not cover ground set {{{}}} exactly", text, ground.to_string()));
  return p;
}

SiteMask Partition::block_containing(int site) const {
  if (site < 1 || site > kMaxSites) return 0;
  SiteMask bit = SiteMask{1} << (site - 1);
  for (SiteMask b : blocks_)
    if (b & bit) return b;
  return 0;
}

std::string Partition::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i) out += '|';
    out += mask_to_string(blocks_[i]);
  }
  return out;
}

static void require_same_ground(const Partition& a, const Partition& b, const char* op) {
  if (a.ground() != b.ground())
    throw DomainError(fmt::format("{}: ground sets differ ({{{}}} vs {{{}}})", op, a.ground().to_string(),
                                  b.ground().to_string()));
}

bool is_refinement(const Partition& a, const Partition& b) {
  require_same_ground(a, b, "is_refinement");
  for (SiteMask blk : a.blocks()) {
    SiteMask host = b.block_containing(lowest_site(blk));
    if (blk & ~host) return false;
  }
  return true;
}

Partition meet(const Partition& a, const Partition& b) {
  require_same_ground(a, b, "meet");
  std::vector<SiteMask> blocks;
  blocks.reserve(a.block_count() + b.block_count());
  for (SiteMask x : a.blocks())
    for (SiteMask y : b.blocks())
      if (SiteMask z = x & y) blocks.push_back(z);
  std::sort(blocks.begin(), blocks.end(), by_lowest_site);
  return Partition(Partition::Canonical{}, std::move(blocks), a.ground_);
}

Partition meet_of_set(std::span<const Partition> partitions, GroundSet ground) {
  Partition out = Partition::coarsest(ground);
  for (const auto& p : partitions) {
    if (p.ground() != ground) throw DomainError("meet_of_set: partition on a different ground set");
    out = meet(out, p);
  }
  return out;
}

Partition restrict(const Partition& a, GroundSet u) {
  if (!u.is_subset_of(a.ground()))
    throw DomainError(fmt::format("restrict: {{{}}} is not a subset of {{{}}}", u.to_string(), a.ground().to_string()));
  std::vector<SiteMask> blocks;
  blocks.reserve(a.block_count());
  for (SiteMask b : a.blocks())
    if (SiteMask z = b & u.mask()) blocks.push_back(z);
  std::sort(blocks.begin(), blocks.end(), by_lowest_site);
  return Partition(Partition::Canonical{}, std::move(blocks), u.mask());
}

Partition join_disjoint(std::span<const Partition> parts) {
  if (parts.empty()) throw DomainError("join_disjoint: empty list");
  std::vector<SiteMask> blocks;
  SiteMask seen = 0;
  for (const auto& p : parts) {
    if (seen & p.ground().mask()) throw DomainError("join_disjoint: ground sets overlap");
    seen |= p.ground().mask();
    blocks.insert(blocks.end(), p.blocks().begin(), p.blocks().end());
  }
  return Partition(std::move(blocks));
}

std::uint64_t count_two_block(int n) {
  if (n < 1 || n > 64) throw DomainError(fmt::format("count_two_block: n = {} out of range", n));
  return n == 64 ? ~std::uint64_t{0} >> 1 : (std::uint64_t{1} << (n - 1)) - 1;
}

std::size_t PartitionHash::operator()(const Partition& p) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (SiteMask b : p.blocks()) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

}  // namespace recomb
