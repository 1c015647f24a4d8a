#include "recomb/coefficients.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "recomb/errors.hpp"

namespace recomb {

CoefficientVector::CoefficientVector(std::shared_ptr<const Lattice> lattice)
    : lattice_(std::move(lattice)), values_(lattice_->size(), 0.0) {}

CoefficientVector::CoefficientVector(std::shared_ptr<const Lattice> lattice, std::vector<double> values)
    : lattice_(std::move(lattice)), values_(std::move(values)) {
  if (values_.size() != lattice_->size())
    throw DomainError(fmt::format("coefficient vector has {} entries, lattice has {}", values_.size(), lattice_->size()));
}

CoefficientVector CoefficientVector::top(GroundSet ground) {
  auto lat = Lattice::of(ground);
  return point(lat, lat->top());
}

CoefficientVector CoefficientVector::point(std::shared_ptr<const Lattice> lattice, Index at) {
  CoefficientVector v(std::move(lattice));
  v.values_.at(at) = 1.0;
  return v;
}

double CoefficientVector::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double CoefficientVector::l1_norm() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s;
}

bool CoefficientVector::is_nonnegative(double tol) const {
  for (double v : values_)
    if (!(v >= -tol)) return false;
  return true;
}

bool CoefficientVector::is_probability(double tol) const {
  return is_nonnegative(tol) && std::abs(sum() - 1.0) <= tol;
}

double max_abs_difference(const CoefficientVector& x, const CoefficientVector& y) {
  if (x.ground() != y.ground()) throw DomainError("max_abs_difference: ground sets differ");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x.values()[i] - y.values()[i]));
  return m;
}

RateSystem::RateSystem(std::shared_ptr<const Lattice> lattice, std::vector<double> rates)
    : lattice_(std::move(lattice)), rates_(std::move(rates)), cache_(std::make_unique<Cache>()) {
  if (rates_.size() != lattice_->size())
    throw DomainError(fmt::format("rate vector has {} entries, lattice has {}", rates_.size(), lattice_->size()));
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!std::isfinite(rates_[i]) || rates_[i] < 0.0)
      throw DomainError(fmt::format("rate for {} must be finite and nonnegative, got {}",
                                    lattice_->at(static_cast<Index>(i)).to_string(), rates_[i]));
    total_ += rates_[i];
  }
}

RateSystem::RateSystem(GroundSet ground, std::span<const std::pair<Partition, double>> rates)
    : RateSystem(Lattice::of(ground), [&] {
        auto lat = Lattice::of(ground);
        std::vector<double> v(lat->size(), 0.0);
        std::vector<bool> seen(lat->size(), false);
        for (const auto& [p, r] : rates) {
          Index i = lat->index_of(p);
          if (seen[i]) throw DomainError(fmt::format("rate for {} given twice", p.to_string()));
          seen[i] = true;
          v[i] = r;
        }
        return v;
      }()) {}

RateSystem::RateSystem(const RateSystem& other)
    : lattice_(other.lattice_), rates_(other.rates_), total_(other.total_), cache_(std::make_unique<Cache>()) {}

RateSystem& RateSystem::operator=(const RateSystem& other) {
  if (this != &other) {
    lattice_ = other.lattice_;
    rates_ = other.rates_;
    total_ = other.total_;
    cache_ = std::make_unique<Cache>();
  }
  return *this;
}

RateSystem::RateSystem(RateSystem&&) noexcept = default;
RateSystem& RateSystem::operator=(RateSystem&&) noexcept = default;
RateSystem::~RateSystem() = default;

const RateSystem& RateSystem::marginal(GroundSet u) const {
  if (u == ground()) return *this;
  if (!u.is_subset_of(ground()))
    throw DomainError(fmt::format("{{{}}} is not a subset of {{{}}}", u.to_string(), ground().to_string()));
  {
    std::lock_guard lock(cache_->mutex);
    auto it = cache_->by_mask.find(u.mask());
    if (it != cache_->by_mask.end()) return *it->second;
  }
  // Go through the subsystem with one more site; its lattice is much smaller
  // than the full one when u is small.
  const SiteMask missing = ground().mask() & ~u.mask();
  const GroundSet v(u.mask() | (missing & (~missing + 1)));
  const RateSystem& parent = marginal(v);
  auto map = parent.lattice().restriction_map(u);
  auto sub = Lattice::of(u);
  std::vector<double> r(sub->size(), 0.0);
  for (std::size_t i = 0; i < parent.rates_.size(); ++i) r[map[i]] += parent.rates_[i];
  auto made = std::make_unique<const RateSystem>(sub, std::move(r));
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->by_mask[u.mask()];
  if (!slot) slot = std::move(made);
  return *slot;
}

RateSystem marginal_rates(const RateSystem& rates, GroundSet u) { return rates.marginal(u); }

CoefficientVector marginal_vector(const CoefficientVector& q, GroundSet u) {
  auto map = q.lattice().restriction_map(u);
  CoefficientVector out(Lattice::of(u));
  for (std::size_t i = 0; i < q.size(); ++i) out[map[i]] += q.values()[i];
  return out;
}

}  // namespace recomb
