#include "recomb/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "recomb/errors.hpp"
#include "recomb/reference.hpp"

namespace recomb {

namespace {

void require_nonnegative(const CoefficientVector& q, const char* op) {
  if (!q.is_nonnegative()) throw DomainError(fmt::format("{}: coefficient vector has negative entries", op));
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw DomainError("time grid is empty");
  if (grid[0] != 0.0) throw DomainError("time grid must start at t = 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
  if (!std::isfinite(grid.back())) throw DomainError("time grid must be finite");
}

void check_step(const RateSystem& rates, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("integration step must be positive");
  if (step * rates.total() > 0.25 * (1.0 + 1e-12))
    throw DomainError(fmt::format("step {} too large: step·ϱ_Σ = {} exceeds 0.25", step, step * rates.total()));
}

// Fixed-step RK4 from t = 0 through every grid time; `record` sees the state
// at each grid time.
template <class Rhs, class Record>
void rk4_over_grid(std::vector<double> y, std::span<const double> grid, double step, Rhs&& rhs, Record&& record) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = 0.0;
  for (double target : grid) {
    const double span = target - t;
    if (span > 0.0) {
      const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / step * (1.0 - 1e-12))));
      const double h = span / static_cast<double>(m);
      for (std::size_t s = 0; s < m; ++s) {
        rhs(y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    t = target;
    record(target, y);
  }
}

void measure_rhs_into(const Measure& omega, const RateSystem& rates, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const Lattice& lat = rates.lattice();
  for (Index a = 0; a < lat.size(); ++a) {
    const double r = rates.rate(a);
    if (r == 0.0 || lat.at(a).is_coarsest()) continue;
    Measure ra = detail::recombinator_unchecked(lat.at(a), omega);
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += r * (ra[s] - omega[s]);
  }
}

}  // namespace

double gamma(const CoefficientVector& q, Index a, Index b) {
  require_nonnegative(q, "gamma");
  const Lattice& lat = q.lattice();
  if (!lat.leq(a, b)) return 0.0;
  const double total = q.sum();
  if (total == 0.0) return 0.0;
  const Partition& pb = lat.at(b);
  double prod = std::pow(total, 1.0 - static_cast<double>(pb.block_count()));
  for (SiteMask blk : pb.blocks()) {
    auto map = lat.restriction_map(GroundSet(blk));
    double s = 0.0;
    for (Index c = 0; c < lat.size(); ++c)
      if (map[c] == map[a]) s += q[c];
    prod *= s;
  }
  return prod;
}

double gamma(const CoefficientVector& q, const Partition& a, const Partition& b) {
  if (a.ground() != q.ground() || b.ground() != q.ground()) throw DomainError("gamma: ground sets differ");
  return gamma(q, q.lattice().index_of(a), q.lattice().index_of(b));
}

double beta(const CoefficientVector& q, Index a, Index b) {
  const Lattice& lat = q.lattice();
  if (!lat.leq(a, b)) return 0.0;
  double s = 0.0;
  for (Index c = 0; c < lat.size(); ++c)
    if (meet(lat.at(c), lat.at(b)) == lat.at(a)) s += q[c];
  return s;
}

double beta(const CoefficientVector& q, const Partition& a, const Partition& b) {
  if (a.ground() != q.ground() || b.ground() != q.ground()) throw DomainError("beta: ground sets differ");
  return beta(q, q.lattice().index_of(a), q.lattice().index_of(b));
}

CoefficientRhs::CoefficientRhs(const RateSystem& rates) : rates_(&rates) {
  const Lattice& lat = rates.lattice();
  for (Index b = 0; b < lat.size(); ++b) {
    if (rates.rate(b) == 0.0) continue;
    Term t{b, rates.rate(b), {}, {}, {}};
    for (SiteMask blk : lat.at(b).blocks()) {
      GroundSet g(blk);
      t.blocks.push_back(g);
      t.maps.push_back(lat.restriction_map(g));
      t.sub_sizes.push_back(Lattice::of(g)->size());
    }
    terms_.push_back(std::move(t));
  }
  terms_above_.resize(lat.size());
  for (std::size_t k = 0; k < terms_.size(); ++k)
    for (Index a : lat.lower(terms_[k].b)) terms_above_[a].push_back(k);
}

void CoefficientRhs::operator()(std::span<const double> a, std::span<double> out) const {
  const Lattice& lat = rates_->lattice();
  const std::size_t N = lat.size();
  const double total = std::accumulate(a.begin(), a.end(), 0.0);

  // Block marginals q^{B_i}, one flat buffer per evaluation.
  std::vector<std::size_t> offset(terms_.size() + 1, 0);
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    std::size_t sz = 0;
    for (std::size_t s : terms_[k].sub_sizes) sz += s;
    offset[k + 1] = offset[k] + sz;
  }
  std::vector<double> marg(offset.back(), 0.0);
  std::vector<double> scale(terms_.size(), 0.0);
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const Term& t = terms_[k];
    double* base = marg.data() + offset[k];
    for (std::size_t i = 0; i < t.blocks.size(); ++i) {
      for (std::size_t c = 0; c < N; ++c) base[t.maps[i][c]] += a[c];
      base += t.sub_sizes[i];
    }
    if (total != 0.0) scale[k] = t.rate * std::pow(total, 1.0 - static_cast<double>(t.blocks.size()));
  }

  const double rho_total = rates_->total();
  const auto NN = static_cast<std::int64_t>(N);
#pragma omp parallel for schedule(static) if (NN >= 512)
  for (std::int64_t ia = 0; ia < NN; ++ia) {
    const auto A = static_cast<std::size_t>(ia);
    double acc = -rho_total * a[A];
    for (std::size_t k : terms_above_[A]) {
      const Term& t = terms_[k];
      const double* base = marg.data() + offset[k];
      double g = scale[k];
      for (std::size_t i = 0; i < t.blocks.size(); ++i) {
        g *= base[t.maps[i][A]];
        base += t.sub_sizes[i];
      }
      acc += g;
    }
    out[A] = acc;
  }
}

CoefficientVector coefficient_rhs(const CoefficientVector& a, const RateSystem& rates) {
  if (a.ground() != rates.ground()) throw DomainError("coefficient_rhs: ground sets differ");
  require_nonnegative(a, "coefficient_rhs");
  CoefficientVector out(a.lattice_ptr());
  const CoefficientRhs rhs(rates);
  rhs(a.values(), out.values());
  return out;
}

std::vector<double> measure_rhs(const Measure& omega, const RateSystem& rates) {
  if (omega.space().sites() != rates.ground()) throw DomainError("measure_rhs: sites differ");
  if (!omega.is_nonnegative()) throw DomainError("measure_rhs: measure has negative entries");
  std::vector<double> out(omega.weights().size());
  measure_rhs_into(omega, rates, out);
  return out;
}

double default_step(const RateSystem& rates) { return rates.total() > 0.0 ? 0.05 / rates.total() : 1.0; }

std::vector<double> linspace(double start, double end, std::size_t points) {
  if (points == 0) throw DomainError("linspace needs at least one point");
  if (points == 1) return {start};
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = start + (end - start) * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = end;
  return g;
}

Trajectory<CoefficientVector> integrate_coefficients(const RateSystem& rates, const CoefficientVector& a0,
                                                     std::span<const double> grid, double step) {
  if (a0.ground() != rates.ground()) throw DomainError("integrate_coefficients: ground sets differ");
  if (!a0.is_probability(1e-12)) throw DomainError("integrate_coefficients: a0 must be a probability vector");
  check_grid(grid);
  check_step(rates, step);
  CoefficientRhs rhs(rates);
  Trajectory<CoefficientVector> traj;
  const double s0 = a0.sum();
  std::vector<double> y(a0.values().begin(), a0.values().end());
  rk4_over_grid(
      std::move(y), grid, step, [&](const std::vector<double>& x, std::vector<double>& k) { rhs(x, k); },
      [&](double t, const std::vector<double>& x) {
        traj.times.push_back(t);
        traj.states.emplace_back(a0.lattice_ptr(), x);
        traj.drift.push_back(std::abs(traj.states.back().sum() - s0));
      });
  return traj;
}

Trajectory<Measure> integrate_measure(const RateSystem& rates, const Measure& omega0, std::span<const double> grid,
                                      double step) {
  if (omega0.space().sites() != rates.ground()) throw DomainError("integrate_measure: sites differ");
  if (!omega0.is_nonnegative()) throw DomainError("integrate_measure: initial measure has negative entries");
  check_grid(grid);
  check_step(rates, step);
  Trajectory<Measure> traj;
  const double s0 = norm(omega0);
  std::vector<double> y(omega0.weights().begin(), omega0.weights().end());
  Measure work(omega0.space());
  rk4_over_grid(
      std::move(y), grid, step,
      [&](const std::vector<double>& x, std::vector<double>& k) {
        std::copy(x.begin(), x.end(), work.weights().begin());
        measure_rhs_into(work, rates, k);
      },
      [&](double t, const std::vector<double>& x) {
        traj.times.push_back(t);
        traj.states.emplace_back(omega0.space(), x);
        traj.drift.push_back(std::abs(norm(traj.states.back()) - s0));
      });
  return traj;
}

namespace reference {

CoefficientVector coefficient_rhs(const CoefficientVector& a, const RateSystem& rates) {
  if (a.ground() != rates.ground()) throw DomainError("coefficient_rhs: ground sets differ");
  const Lattice& lat = a.lattice();
  CoefficientVector out(a.lattice_ptr());
  for (Index x = 0; x < lat.size(); ++x) {
    double v = -rates.total() * a[x];
    for (Index b : lat.upper(x))
      if (rates.rate(b) != 0.0) v += gamma(a, x, b) * rates.rate(b);
    out[x] = v;
  }
  return out;
}

}  // namespace reference

}  // namespace recomb
