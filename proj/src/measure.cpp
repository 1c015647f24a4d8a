#include "recomb/measure.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "recomb/csv.hpp"
#include "recomb/errors.hpp"
#include "recomb/reference.hpp"

namespace recomb {

namespace {

constexpr std::size_t kMaxStates = std::size_t{1} << 28;
constexpr std::size_t kParallelStates = std::size_t{1} << 12;

void require_nonnegative(const Measure& nu, const char* op) {
  if (!nu.is_nonnegative()) throw DomainError(fmt::format("{}: measure has negative entries", op));
}

// Per-site layout of a recombinator: which block a site feeds and the
// stride of that site inside the block's factor space.
struct BlockLayout {
  std::vector<std::size_t> block_of;
  std::vector<std::size_t> stride;
};

BlockLayout layout_for(const Partition& a, const TypeSpace& space) {
  const auto sites = space.sites().sites();
  const auto sizes = space.alphabet_sizes();
  BlockLayout l{std::vector<std::size_t>(sites.size()), std::vector<std::size_t>(sites.size())};
  std::vector<std::size_t> running(a.block_count(), 1);
  for (std::size_t p = sites.size(); p-- > 0;) {
    SiteMask host = a.block_containing(sites[p]);
    std::size_t b = 0;
    while (a.block(b) != host) ++b;
    l.block_of[p] = b;
    l.stride[p] = running[b];
    running[b] *= static_cast<std::size_t>(sizes[p]);
  }
  return l;
}

std::vector<Measure> block_marginals(const Partition& a, const Measure& nu) {
  std::vector<Measure> m;
  m.reserve(a.block_count());
  for (SiteMask b : a.blocks()) m.push_back(project(nu, GroundSet(b)));
  return m;
}

}  // namespace

TypeSpace::TypeSpace(GroundSet sites, std::vector<int> alphabet_sizes)
    : sites_(sites), sizes_(std::move(alphabet_sizes)), count_(1) {
  if (sizes_.size() != static_cast<std::size_t>(sites_.size()))
    throw DomainError(fmt::format("{} alphabet sizes given for {} sites", sizes_.size(), sites_.size()));
  for (int s : sizes_) {
    if (s < 1) throw DomainError("alphabet sizes must be at least 1");
    count_ *= static_cast<std::size_t>(s);
    if (count_ > kMaxStates) throw DomainError("type space too large for a dense tensor");
  }
}

TypeSpace TypeSpace::uniform(int n, int letters) {
  return TypeSpace(GroundSet::first(n), std::vector<int>(static_cast<std::size_t>(n), letters));
}

int TypeSpace::alphabet_size(int site) const {
  if (!sites_.contains(site)) throw DomainError(fmt::format("site {} not in type space", site));
  return sizes_[static_cast<std::size_t>(std::popcount(sites_.mask() & ((SiteMask{1} << (site - 1)) - 1)))];
}

std::vector<int> TypeSpace::decode(std::size_t state) const {
  std::vector<int> d(sizes_.size());
  for (std::size_t p = sizes_.size(); p-- > 0;) {
    d[p] = static_cast<int>(state % static_cast<std::size_t>(sizes_[p]));
    state /= static_cast<std::size_t>(sizes_[p]);
  }
  return d;
}

std::size_t TypeSpace::encode(std::span<const int> digits) const {
  if (digits.size() != sizes_.size()) throw DomainError("digit count does not match type space");
  std::size_t s = 0;
  for (std::size_t p = 0; p < sizes_.size(); ++p) {
    if (digits[p] < 0 || digits[p] >= sizes_[p]) throw DomainError("letter outside alphabet");
    s = s * static_cast<std::size_t>(sizes_[p]) + static_cast<std::size_t>(digits[p]);
  }
  return s;
}

TypeSpace TypeSpace::sub(GroundSet u) const {
  if (!u.is_subset_of(sites_))
    throw DomainError(fmt::format("{{{}}} is not a subset of {{{}}}", u.to_string(), sites_.to_string()));
  std::vector<int> sizes;
  for (int s : u.sites()) sizes.push_back(alphabet_size(s));
  return TypeSpace(u, std::move(sizes));
}

Measure::Measure(TypeSpace space) : space_(std::move(space)), weights_(space_.state_count(), 0.0) {}

Measure::Measure(TypeSpace space, std::vector<double> weights)
    : space_(std::move(space)), weights_(std::move(weights)) {
  if (weights_.size() != space_.state_count())
    throw DomainError(fmt::format("measure has {} weights, space has {} states", weights_.size(), space_.state_count()));
}

Measure Measure::uniform(TypeSpace space) {
  const double w = 1.0 / static_cast<double>(space.state_count());
  const std::size_t count = space.state_count();
  return Measure(std::move(space), std::vector<double>(count, w));
}

Measure Measure::product(TypeSpace space, const std::vector<std::vector<double>>& factors) {
  const auto sizes = space.alphabet_sizes();
  if (factors.size() != sizes.size()) throw DomainError("product measure needs one factor per site");
  for (std::size_t p = 0; p < sizes.size(); ++p)
    if (factors[p].size() != static_cast<std::size_t>(sizes[p]))
      throw DomainError(fmt::format("factor {} has {} entries, alphabet has {}", p + 1, factors[p].size(), sizes[p]));
  Measure nu(std::move(space));
  for (std::size_t s = 0; s < nu.weights_.size(); ++s) {
    auto d = nu.space_.decode(s);
    double w = 1.0;
    for (std::size_t p = 0; p < d.size(); ++p) w *= factors[p][static_cast<std::size_t>(d[p])];
    nu.weights_[s] = w;
  }
  return nu;
}

bool Measure::is_nonnegative() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w >= 0.0; });
}

double norm(const Measure& nu) {
  return std::accumulate(nu.weights().begin(), nu.weights().end(), 0.0);
}

double l1_distance(const Measure& x, const Measure& y) {
  if (!(x.space() == y.space())) throw DomainError("l1_distance: type spaces differ");
  double s = 0.0;
  for (std::size_t i = 0; i < x.weights().size(); ++i) s += std::abs(x[i] - y[i]);
  return s;
}

Measure project(const Measure& nu, GroundSet u) {
  const TypeSpace& space = nu.space();
  Measure out(space.sub(u));
  if (u == space.sites()) return nu;
  const auto sites = space.sites().sites();
  const auto sizes = space.alphabet_sizes();
  std::vector<std::size_t> stride(sites.size(), 0);
  std::size_t run = 1;
  for (std::size_t p = sites.size(); p-- > 0;)
    if (u.contains(sites[p])) {
      stride[p] = run;
      run *= static_cast<std::size_t>(sizes[p]);
    }
  const std::size_t count = space.state_count();
  for (std::size_t s = 0; s < count; ++s) {
    std::size_t rest = s, idx = 0;
    for (std::size_t p = sites.size(); p-- > 0;) {
      const auto z = static_cast<std::size_t>(sizes[p]);
      idx += (rest % z) * stride[p];
      rest /= z;
    }
    out[idx] += nu[s];
  }
  return out;
}

Measure recombinator(const Partition& a, const Measure& nu) {
  require_nonnegative(nu, "recombinator");
  return detail::recombinator_unchecked(a, nu);
}

Measure detail::recombinator_unchecked(const Partition& a, const Measure& nu) {
  if (a.ground() != nu.space().sites()) throw DomainError("recombinator: partition and measure sites differ");
  const double total = norm(nu);
  Measure out(nu.space());
  if (total == 0.0) return out;
  if (a.is_coarsest()) return nu;

  const auto marg = block_marginals(a, nu);
  const auto lay = layout_for(a, nu.space());
  const double scale = std::pow(total, 1.0 - static_cast<double>(a.block_count()));
  const auto sizes = nu.space().alphabet_sizes();
  const std::size_t r = a.block_count();
  const auto count = static_cast<std::int64_t>(nu.space().state_count());
  auto w = out.weights();

#pragma omp parallel for schedule(static) if (count >= static_cast<std::int64_t>(kParallelStates))
  for (std::int64_t s = 0; s < count; ++s) {
    std::size_t idx[kMaxSites] = {};
    auto rest = static_cast<std::size_t>(s);
    for (std::size_t p = sizes.size(); p-- > 0;) {
      const auto z = static_cast<std::size_t>(sizes[p]);
      idx[lay.block_of[p]] += (rest % z) * lay.stride[p];
      rest /= z;
    }
    double v = scale;
    for (std::size_t i = 0; i < r; ++i) v *= marg[i][idx[i]];
    w[static_cast<std::size_t>(s)] = v;
  }
  return out;
}

InvariantPartitions invariant_partition_set(const Measure& nu, double eps) {
  require_nonnegative(nu, "invariant_partition_set");
  const double total = norm(nu);
  if (total <= 0.0) throw DomainError("invariant_partition_set: zero measure");
  auto lat = Lattice::of(nu.space().sites());
  InvariantPartitions out{{}, Partition::coarsest(nu.space().sites())};
  for (const Partition& p : lat->elements())
    if (l1_distance(recombinator(p, nu), nu) <= eps * total) {
      out.fixed.push_back(p);
      out.meet = meet(out.meet, p);
    }
  return out;
}

Measure mixture(const CoefficientVector& coeffs, const Measure& nu0) {
  if (coeffs.ground() != nu0.space().sites()) throw DomainError("mixture: coefficient and measure sites differ");
  require_nonnegative(nu0, "mixture");
  Measure out(nu0.space());
  const Lattice& lat = coeffs.lattice();
  for (Index c = 0; c < lat.size(); ++c) {
    const double w = coeffs[c];
    if (w == 0.0) continue;
    Measure rc = recombinator(lat.at(c), nu0);
    for (std::size_t s = 0; s < out.weights().size(); ++s) out[s] += w * rc[s];
  }
  return out;
}

void write_measure_csv(std::ostream& out, const Measure& nu) {
  const auto sites = nu.space().sites().sites();
  std::vector<std::string> row;
  for (int s : sites) row.push_back(fmt::format("x{}", s));
  row.emplace_back("weight");
  csv::write_row(out, row);
  for (std::size_t s = 0; s < nu.weights().size(); ++s) {
    row.clear();
    for (int d : nu.space().decode(s)) row.push_back(std::to_string(d));
    row.push_back(csv::format_double(nu[s]));
    csv::write_row(out, row);
  }
}

Measure read_measure_csv(std::istream& in, const TypeSpace& space) {
  auto table = csv::read(in);
  const auto sites = space.sites().sites();
  std::vector<std::size_t> cols;
  for (int s : sites) cols.push_back(table.column(fmt::format("x{}", s)));
  const std::size_t wcol = table.column("weight");
  Measure nu(space);
  std::vector<bool> seen(space.state_count(), false);
  std::vector<int> digits(sites.size());
  for (const auto& row : table.rows) {
    for (std::size_t p = 0; p < sites.size(); ++p) {
      double d = csv::parse_double(row[cols[p]]);
      if (d != std::floor(d)) throw DomainError(fmt::format("letter '{}' is not an integer", row[cols[p]]));
      digits[p] = static_cast<int>(d);
    }
    const std::size_t s = space.encode(digits);
    if (seen[s]) throw DomainError("measure CSV lists a state twice");
    seen[s] = true;
    const double w = csv::parse_double(row[wcol]);
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("measure CSV weights must be finite and nonnegative");
    nu[s] = w;
  }
  return nu;
}

namespace reference {

Measure recombinator(const Partition& a, const Measure& nu) {
  if (a.ground() != nu.space().sites()) throw DomainError("recombinator: partition and measure sites differ");
  require_nonnegative(nu, "recombinator");
  const double total = norm(nu);
  Measure out(nu.space());
  if (total == 0.0) return out;
  if (a.is_coarsest()) return nu;
  const auto marg = block_marginals(a, nu);
  const auto lay = layout_for(a, nu.space());
  const double scale = std::pow(total, 1.0 - static_cast<double>(a.block_count()));
  const auto sizes = nu.space().alphabet_sizes();
  std::vector<int> digit(sizes.size(), 0);
  std::vector<std::size_t> idx(a.block_count(), 0);
  for (std::size_t s = 0; s < out.weights().size(); ++s) {
    double v = scale;
    for (std::size_t i = 0; i < idx.size(); ++i) v *= marg[i][idx[i]];
    out[s] = v;
    // Odometer increment, keeping the block indices in step.
    for (std::size_t p = sizes.size(); p-- > 0;) {
      idx[lay.block_of[p]] += lay.stride[p];
      if (++digit[p] < sizes[p]) break;
      idx[lay.block_of[p]] -= lay.stride[p] * static_cast<std::size_t>(sizes[p]);
      digit[p] = 0;
    }
  }
  return out;
}

}  // namespace reference

}  // namespace recomb
