#include "recomb/lattice.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "recomb/errors.hpp"
#include "recomb/reference.hpp"

namespace recomb {

namespace {

// Advance a restricted growth string to its lexicographic successor.
bool next_rgs(std::vector<std::uint8_t>& rgs, std::vector<std::uint8_t>& prefix_max) {
  const std::size_t k = rgs.size();
  for (std::size_t p = k; p-- > 1;) {
    if (rgs[p] <= prefix_max[p - 1]) {
      ++rgs[p];
      prefix_max[p] = std::max(prefix_max[p - 1], rgs[p]);
      for (std::size_t q = p + 1; q < k; ++q) {
        rgs[q] = 0;
        prefix_max[q] = prefix_max[p];
      }
      return true;
    }
  }
  return false;
}

template <class F>
void for_each_rgs(std::size_t k, F&& f) {
  std::vector<std::uint8_t> rgs(k, 0), pm(k, 0);
  do {
    f(std::span<const std::uint8_t>(rgs));
  } while (next_rgs(rgs, pm));
}

}  // namespace

Lattice::Lattice(GroundSet ground) : ground_(ground), k_(ground.size()) {
  if (k_ > kMaxLatticeSites)
    throw DomainError(fmt::format("lattice enumeration limited to {} sites, got {}", kMaxLatticeSites, k_));
  const auto K = static_cast<std::size_t>(k_);
  completions_.assign((K + 1) * (K + 1), 0);
  auto D = [&](std::size_t r, std::size_t m) -> std::uint64_t& { return completions_[r * (K + 1) + m]; };
  for (std::size_t m = 0; m <= K; ++m) D(0, m) = 1;
  for (std::size_t r = 1; r <= K; ++r)
    for (std::size_t m = 0; m + r <= K; ++m) D(r, m) = (m + 1) * D(r - 1, m) + (m + 1 <= K ? D(r - 1, m + 1) : 0);

  const auto sites = ground.sites();
  for_each_rgs(K, [&](std::span<const std::uint8_t> rgs) {
    std::vector<SiteMask> blocks;
    for (std::size_t p = 0; p < K; ++p) {
      if (rgs[p] >= blocks.size()) blocks.push_back(0);
      blocks[rgs[p]] |= SiteMask{1} << (sites[p] - 1);
    }
    elements_.emplace_back(std::move(blocks));
    rgs_.insert(rgs_.end(), rgs.begin(), rgs.end());
  });
  mobius_once_ = std::make_unique<std::once_flag[]>(elements_.size());
  mobius_rows_.resize(elements_.size());
}

std::shared_ptr<const Lattice> Lattice::of(GroundSet ground) {
  static std::mutex mutex;
  static std::map<SiteMask, std::shared_ptr<const Lattice>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[ground.mask()];
  if (!slot) slot = std::shared_ptr<const Lattice>(new Lattice(ground));
  return slot;
}

Index Lattice::rank_rgs(std::span<const std::uint8_t> rgs) const {
  const auto K = static_cast<std::size_t>(k_);
  std::uint64_t rank = 0;
  std::size_t m = 0;
  for (std::size_t p = 1; p < K; ++p) {
    rank += rgs[p] * completions_[(K - 1 - p) * (K + 1) + m];
    m = std::max<std::size_t>(m, rgs[p]);
  }
  return static_cast<Index>(rank);
}

Index Lattice::index_of(const Partition& p) const {
  if (p.ground() != ground_)
    throw DomainError(fmt::format("partition {} is not on ground set {{{}}}", p.to_string(), ground_.to_string()));
  std::uint8_t rgs[kMaxLatticeSites];
  std::size_t pos = 0;
  for (SiteMask m = ground_.mask(); m; m &= m - 1, ++pos) {
    SiteMask bit = m & (~m + 1);
    for (std::size_t b = 0; b < p.block_count(); ++b)
      if (p.block(b) & bit) {
        rgs[pos] = static_cast<std::uint8_t>(b);
        break;
      }
  }
  return rank_rgs(std::span<const std::uint8_t>(rgs, pos));
}

void Lattice::build_upper() const {
  const auto N = static_cast<std::int64_t>(size());
  const auto K = static_cast<std::size_t>(k_);
  up_off_.assign(size() + 1, 0);
  for (std::size_t i = 0; i < size(); ++i) {
    const std::size_t r = elements_[i].block_count();
    up_off_[i + 1] = up_off_[i] + completions_[(r - 1) * (K + 1)];
  }
  up_.resize(up_off_.back());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < N; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    std::span<const std::uint8_t> own(&rgs_[ui * K], K);
    std::uint8_t merged[kMaxLatticeSites];
    Index* out = &up_[up_off_[ui]];
    std::size_t n_out = 0;
    for_each_rgs(elements_[ui].block_count(), [&](std::span<const std::uint8_t> g) {
      for (std::size_t p = 0; p < K; ++p) merged[p] = g[own[p]];
      out[n_out++] = rank_rgs(std::span<const std::uint8_t>(merged, K));
    });
    std::sort(out, out + n_out);
  }
}

void Lattice::build_lower() const {
  std::call_once(upper_once_, [this] { build_upper(); });
  std::vector<std::size_t> counts(size(), 0);
  for (Index j : up_) ++counts[j];
  down_off_.assign(size() + 1, 0);
  for (std::size_t j = 0; j < size(); ++j) down_off_[j + 1] = down_off_[j] + counts[j];
  down_.resize(down_off_.back());
  std::vector<std::size_t> fill(down_off_.begin(), down_off_.end() - 1);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t q = up_off_[i]; q < up_off_[i + 1]; ++q) down_[fill[up_[q]]++] = static_cast<Index>(i);
}

std::span<const Index> Lattice::upper(Index i) const {
  std::call_once(upper_once_, [this] { build_upper(); });
  return {up_.data() + up_off_[i], up_off_[i + 1] - up_off_[i]};
}

std::span<const Index> Lattice::lower(Index i) const {
  std::call_once(lower_once_, [this] { build_lower(); });
  return {down_.data() + down_off_[i], down_off_[i + 1] - down_off_[i]};
}

std::size_t Lattice::upper_offset(Index i) const {
  std::call_once(upper_once_, [this] { build_upper(); });
  return up_off_[i];
}

std::size_t Lattice::pair_count() const {
  std::call_once(upper_once_, [this] { build_upper(); });
  return up_.size();
}

bool Lattice::leq(Index i, Index j) const {
  if (i < j) return false;
  const Partition& a = elements_[i];
  const Partition& b = elements_[j];
  for (SiteMask blk : a.blocks())
    if (blk & ~b.block_containing(lowest_site(blk))) return false;
  return true;
}

std::ptrdiff_t Lattice::upper_position(Index i, Index j) const {
  auto row = upper(i);
  auto it = std::lower_bound(row.begin(), row.end(), j);
  if (it == row.end() || *it != j) return -1;
  return it - row.begin();
}

std::span<const Index> Lattice::restriction_map(GroundSet u) const {
  if (!u.is_subset_of(ground_))
    throw DomainError(fmt::format("{{{}}} is not a subset of {{{}}}", u.to_string(), ground_.to_string()));
  std::lock_guard lock(restrict_mutex_);
  auto& slot = restrict_maps_[u.mask()];
  if (!slot) {
    auto sub = Lattice::of(u);
    auto map = std::make_unique<std::vector<Index>>(size());
    for (std::size_t i = 0; i < size(); ++i) (*map)[i] = sub->index_of(restrict(elements_[i], u));
    slot = std::move(map);
  }
  return *slot;
}

std::span<const std::int64_t> Lattice::mobius_row(Index i) const {
  std::call_once(mobius_once_[i], [this, i] {
    auto ui = upper(i);
    std::vector<std::int64_t> mu(ui.size(), 0), acc(ui.size(), 0);
    // Walk from i towards 1̲; every c is final before anything above it is read.
    for (std::size_t pc = ui.size(); pc-- > 0;) {
      const Index c = ui[pc];
      mu[pc] = (c == i) ? 1 : -acc[pc];
      for (Index b : upper(c)) {
        if (b == c) continue;
        auto pb = std::lower_bound(ui.begin(), ui.end(), b) - ui.begin();
        acc[static_cast<std::size_t>(pb)] += mu[pc];
      }
    }
    mobius_rows_[i] = std::move(mu);
  });
  return mobius_rows_[i];
}

std::int64_t Lattice::mobius(Index i, Index j) const {
  auto pos = upper_position(i, j);
  return pos < 0 ? 0 : mobius_row(i)[static_cast<std::size_t>(pos)];
}

std::vector<Partition> enumerate_partitions(GroundSet ground) {
  auto lat = Lattice::of(ground);
  return {lat->elements().begin(), lat->elements().end()};
}

std::int64_t mobius(const Partition& a, const Partition& b) {
  if (a.ground() != b.ground()) throw DomainError("mobius: ground sets differ");
  auto lat = Lattice::of(a.ground());
  return lat->mobius(lat->index_of(a), lat->index_of(b));
}

IncidenceElement::IncidenceElement(std::shared_ptr<const Lattice> lattice)
    : lattice_(std::move(lattice)), values_(lattice_->pair_count(), 0.0) {}

IncidenceElement IncidenceElement::delta(std::shared_ptr<const Lattice> lattice) {
  IncidenceElement e(std::move(lattice));
  for (Index a = 0; a < e.lattice().size(); ++a) e.row(a).back() = 1.0;
  return e;
}

IncidenceElement IncidenceElement::zeta(std::shared_ptr<const Lattice> lattice) {
  IncidenceElement e(std::move(lattice));
  std::fill(e.values_.begin(), e.values_.end(), 1.0);
  return e;
}

IncidenceElement IncidenceElement::mobius(std::shared_ptr<const Lattice> lattice) {
  IncidenceElement e(std::move(lattice));
  for (Index a = 0; a < e.lattice().size(); ++a) {
    auto mu = e.lattice().mobius_row(a);
    std::copy(mu.begin(), mu.end(), e.row(a).begin());
  }
  return e;
}

double IncidenceElement::operator()(Index a, Index b) const {
  auto pos = lattice_->upper_position(a, b);
  return pos < 0 ? 0.0 : row(a)[static_cast<std::size_t>(pos)];
}

double IncidenceElement::operator()(const Partition& a, const Partition& b) const {
  return (*this)(lattice_->index_of(a), lattice_->index_of(b));
}

void IncidenceElement::set(Index a, Index b, double v) {
  auto pos = lattice_->upper_position(a, b);
  if (pos < 0)
    throw DomainError(fmt::format("incidence value outside a ≼ b: ({}, {})", lattice_->at(a).to_string(),
                                  lattice_->at(b).to_string()));
  row(a)[static_cast<std::size_t>(pos)] = v;
}

std::span<const double> IncidenceElement::row(Index a) const {
  return {values_.data() + lattice_->upper_offset(a), lattice_->upper(a).size()};
}

std::span<double> IncidenceElement::row(Index a) {
  return {values_.data() + lattice_->upper_offset(a), lattice_->upper(a).size()};
}

IncidenceElement convolve(const IncidenceElement& x, const IncidenceElement& y) {
  if (x.ground() != y.ground()) throw DomainError("convolve: ground sets differ");
  const Lattice& lat = x.lattice();
  IncidenceElement out(x.lattice_ptr());
  const auto N = static_cast<std::int64_t>(lat.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t ia = 0; ia < N; ++ia) {
    const auto a = static_cast<Index>(ia);
    auto ua = lat.upper(a);
    auto xa = x.row(a);
    auto oa = out.row(a);
    for (std::size_t pc = 0; pc < ua.size(); ++pc) {
      if (xa[pc] == 0.0) continue;
      const Index c = ua[pc];
      auto uc = lat.upper(c);
      auto yc = y.row(c);
      // upper(c) is a sorted subsequence of upper(a): merge instead of searching.
      std::size_t pb = 0;
      for (std::size_t q = 0; q < uc.size(); ++q) {
        while (ua[pb] != uc[q]) ++pb;
        oa[pb] += xa[pc] * yc[q];
      }
    }
  }
  return out;
}

namespace reference {

IncidenceElement convolve(const IncidenceElement& x, const IncidenceElement& y) {
  if (x.ground() != y.ground()) throw DomainError("convolve: ground sets differ");
  const Lattice& lat = x.lattice();
  IncidenceElement out(x.lattice_ptr());
  for (Index a = 0; a < lat.size(); ++a)
    for (Index b : lat.upper(a)) {
      double s = 0.0;
      for (Index c : lat.upper(a))
        if (lat.leq(c, b)) s += x(a, c) * y(c, b);
      out.set(a, b, s);
    }
  return out;
}

}  // namespace reference

}  // namespace recomb
