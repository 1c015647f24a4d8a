#include "recomb/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include <fmt/format.h>

#include "recomb/errors.hpp"
#include "recomb/reference.hpp"

namespace recomb {

struct ClosedFormSolution::Table {
  explicit Table(std::shared_ptr<const Lattice> l) : lat(l), psi(l->size(), 0.0), theta(std::move(l)) {}

  std::shared_ptr<const Lattice> lat;
  std::vector<double> psi;
  IncidenceElement theta;
  bool valid = true;
  mutable std::once_flag eta_once;
  mutable std::optional<IncidenceElement> eta;
};

namespace {

using Table = ClosedFormSolution::Table;

std::string describe(const DegeneracyReport& r) {
  for (const auto& p : r.pairs)
    if (p.kind == DegeneratePair::Kind::bad)
      return fmt::format("bad degeneracy: {} bad pair(s); first on {{{}}}: psi({}) = psi({}) = {}", r.bad_count,
                         p.subset.to_string(), p.first.to_string(), p.second.to_string(), p.psi_first);
  return fmt::format("bad degeneracy: {} bad pair(s)", r.bad_count);
}

class Builder {
 public:
  Builder(const RateSystem& rates, double tol, bool parallel)
      : rates_(rates), parallel_(parallel), abs_tol_(tol * std::max(rates.total(), 1.0)) {
    if (!(tol >= 0.0)) throw DomainError("degeneracy tolerance must be nonnegative");
    report_.tolerance = tol;
  }

  void run() {
    const SiteMask S = rates_.ground().mask();
    std::vector<SiteMask> masks;
    for (SiteMask m = S; m; m = (m - 1) & S) masks.push_back(m);
    std::sort(masks.begin(), masks.end(), [](SiteMask a, SiteMask b) {
      return site_count(a) != site_count(b) ? site_count(a) < site_count(b) : a < b;
    });
    for (SiteMask u : masks) build_subset(u);

    // Coincidences in a subsystem reappear one level up, so a generic top
    // level implies generic subsystems.
    const bool top_generic =
        std::none_of(report_.pairs.begin(), report_.pairs.end(), [&](const auto& p) { return p.subset.mask() == S; });
    if (top_generic && report_.pair_count > 0 && report_.pair_count == report_.pairs.size())
      throw std::logic_error("degeneracy in a subsystem without a matching one on the full ground set");
  }

  std::map<SiteMask, std::unique_ptr<Table>> take_tables() { return std::move(tables_); }
  DegeneracyReport take_report() { return std::move(report_); }

 private:
  struct ActiveC {
    double rate;
    std::vector<std::span<const Index>> maps;
    std::vector<const IncidenceElement*> thetas;
  };

  void add_pair(GroundSet u, const Lattice& lat, Index x, Index y, const std::vector<double>& psi,
                DegeneratePair::Kind kind) {
    ++report_.pair_count;
    if (kind == DegeneratePair::Kind::bad) ++report_.bad_count;
    if (report_.pairs.size() < DegeneracyReport::kMaxListed)
      report_.pairs.push_back({u, lat.at(x), lat.at(y), psi[x], psi[y], kind});
  }

  void build_subset(SiteMask umask) {
    const GroundSet u(umask);
    auto lat = Lattice::of(u);
    auto table = std::make_unique<Table>(lat);
    const std::size_t N = lat->size();
    const Index top = lat->top();

    if (site_count(umask) == 1) {
      table->theta.set(top, top, 1.0);
      tables_[umask] = std::move(table);
      tainted_[umask] = false;
      return;
    }

    const RateSystem& r = rates_.marginal(u);
    auto& psi = table->psi;
    const double psi_top = rates_.total() - r.rate(top);
    psi[top] = psi_top;
    for (Index a = 1; a < N; ++a) {
      double s = 0.0;
      for (SiteMask blk : lat->at(a).blocks()) s += tables_.at(blk)->psi[0];
      psi[a] = s;
    }

    bool below_tainted = false;
    for (SiteMask v = (umask - 1) & umask; v; v = (v - 1) & umask) below_tainted = below_tainted || tainted_.at(v);

    std::vector<char> active(N, 0);
    bool own_bad = false;
    if (!below_tainted) {
      std::vector<int> active_pos(N, -1);
      std::vector<ActiveC> cs;
      for (Index c = 1; c < N; ++c) {
        if (r.rate(c) == 0.0) continue;
        ActiveC ac{r.rate(c), {}, {}};
        for (SiteMask blk : lat->at(c).blocks()) {
          ac.maps.push_back(lat->restriction_map(GroundSet(blk)));
          ac.thetas.push_back(&tables_.at(blk)->theta);
        }
        active_pos[c] = static_cast<int>(cs.size());
        cs.push_back(std::move(ac));
      }

      IncidenceElement& theta = table->theta;
      const auto NN = static_cast<std::int64_t>(N);
      const double tol = abs_tol_;
#pragma omp parallel for schedule(dynamic, 4) if (parallel_ && N >= 64)
      for (std::int64_t ib = 1; ib < NN; ++ib) {
        const auto b = static_cast<Index>(ib);
        auto low = lat->lower(b);
        std::vector<double> num(low.size(), 0.0);
        for (Index c : lat->upper(b)) {
          if (c == top || active_pos[c] < 0) continue;
          const ActiveC& ac = cs[static_cast<std::size_t>(active_pos[c])];
          for (std::size_t q = 0; q < low.size(); ++q) {
            const Index a = low[q];
            double prod = ac.rate;
            for (std::size_t i = 0; i < ac.maps.size(); ++i) prod *= (*ac.thetas[i])(ac.maps[i][a], ac.maps[i][b]);
            num[q] += prod;
          }
        }
        const double denom = psi_top - psi[b];
        if (std::abs(denom) <= tol) {
          double worst = 0.0;
          for (double v : num) worst = std::max(worst, std::abs(v));
          active[b] = worst > tol;
          continue;  // θ(·, b) stays 0
        }
        for (std::size_t q = 0; q < low.size(); ++q) theta.set(low[q], b, num[q] / denom);
      }
      own_bad = std::any_of(active.begin(), active.end(), [](char x) { return x != 0; });

      for (Index a = 1; a < N; ++a) {
        auto row = theta.row(a);
        double s = 0.0;
        for (std::size_t q = 1; q < row.size(); ++q) s += row[q];
        row[0] = -s;
      }
      theta.set(top, top, 1.0);
    }

    // Coincidences, scanning groups of nearly equal ψ.
    std::vector<Index> order(N);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return psi[x] < psi[y]; });
    for (std::size_t g = 0; g < N;) {
      std::size_t h = g + 1;
      while (h < N && psi[order[h]] - psi[order[h - 1]] <= abs_tol_) ++h;
      for (std::size_t i = g; i < h; ++i)
        for (std::size_t j = i + 1; j < h; ++j) {
          Index x = std::min(order[i], order[j]), y = std::max(order[i], order[j]);
          if (std::abs(psi[x] - psi[y]) > abs_tol_) continue;
          auto kind = DegeneratePair::Kind::harmless;
          if (x == top && (below_tainted || active[y])) kind = DegeneratePair::Kind::bad;
          add_pair(u, *lat, y, x, psi, kind);
        }
      g = h;
    }

    tainted_[umask] = below_tainted || own_bad;
    table->valid = !tainted_[umask];
    tables_[umask] = std::move(table);
  }

  const RateSystem& rates_;
  bool parallel_;
  double abs_tol_;
  std::map<SiteMask, std::unique_ptr<Table>> tables_;
  std::map<SiteMask, bool> tainted_;
  DegeneracyReport report_;
};

ClosedFormSolution build(const RateSystem& rates, double tol, bool parallel) {
  Builder b(rates, tol, parallel);
  b.run();
  auto report = b.take_report();
  if (report.has_bad()) throw DegeneracyError(std::move(report));
  return ClosedFormSolution(rates, b.take_tables(), std::move(report));
}

}  // namespace

DegeneracyError::DegeneracyError(DegeneracyReport report)
    : std::runtime_error(describe(report)), report_(std::move(report)) {}

ClosedFormSolution::ClosedFormSolution(RateSystem rates, std::map<SiteMask, std::unique_ptr<Table>> tables,
                                       DegeneracyReport report)
    : rates_(std::move(rates)), tables_(std::move(tables)), report_(std::move(report)) {}
ClosedFormSolution::ClosedFormSolution(ClosedFormSolution&&) noexcept = default;
ClosedFormSolution& ClosedFormSolution::operator=(ClosedFormSolution&&) noexcept = default;
ClosedFormSolution::~ClosedFormSolution() = default;

const ClosedFormSolution::Table& ClosedFormSolution::table(GroundSet u) const {
  auto it = tables_.find(u.mask());
  if (it == tables_.end())
    throw DomainError(fmt::format("no closed-form table for {{{}}} (ground set {{{}}})", u.to_string(),
                                  ground().to_string()));
  if (!it->second->valid) throw DomainError(fmt::format("closed-form table for {{{}}} is degenerate", u.to_string()));
  return *it->second;
}

std::span<const double> ClosedFormSolution::psi(GroundSet u) const { return table(u).psi; }

double ClosedFormSolution::psi(GroundSet u, const Partition& a) const {
  const Table& t = table(u);
  return t.psi[t.lat->index_of(a)];
}

const IncidenceElement& ClosedFormSolution::theta(GroundSet u) const { return table(u).theta; }

const IncidenceElement& ClosedFormSolution::eta(GroundSet u) const {
  const Table& tab = table(u);
  std::call_once(tab.eta_once, [&] {
    const Lattice& lat = *tab.lat;
    const IncidenceElement& th = tab.theta;
    IncidenceElement et(tab.lat);
    std::vector<double> acc;
    // Rows of coarser partitions (smaller index) are finished first.
    for (Index a = 0; a < lat.size(); ++a) {
      auto ua = lat.upper(a);
      auto tha = th.row(a);
      const double diag = tha.back();
      if (!(std::abs(diag) > 0.0) || !std::isfinite(diag))
        throw NotInvertibleError(fmt::format("theta on {{{}}} has vanishing diagonal at {}", u.to_string(),
                                             lat.at(a).to_string()));
      acc.assign(ua.size(), 0.0);
      for (std::size_t pb = 0; pb + 1 < ua.size(); ++pb) {
        const Index b = ua[pb];
        if (tha[pb] == 0.0) continue;
        auto ub = lat.upper(b);
        auto etb = et.row(b);
        std::size_t pc = 0;
        for (std::size_t q = 0; q < ub.size(); ++q) {
          while (ua[pc] != ub[q]) ++pc;
          acc[pc] += tha[pb] * etb[q];
        }
      }
      auto eta_a = et.row(a);
      for (std::size_t pc = 0; pc + 1 < ua.size(); ++pc) eta_a[pc] = -acc[pc] / diag;
      eta_a.back() = 1.0 / diag;
    }
    tab.eta.emplace(std::move(et));
  });
  return *tab.eta;
}

CoefficientVector ClosedFormSolution::evaluate(GroundSet u, double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("evaluate: time must be finite and nonnegative");
  const Table& tab = table(u);
  const Lattice& lat = *tab.lat;
  std::vector<double> decay(lat.size());
  for (std::size_t b = 0; b < decay.size(); ++b) decay[b] = std::exp(-tab.psi[b] * t);
  CoefficientVector out(tab.lat);
  for (Index a = 0; a < lat.size(); ++a) {
    auto ua = lat.upper(a);
    auto row = tab.theta.row(a);
    double s = 0.0;
    for (std::size_t q = 0; q < ua.size(); ++q) s += row[q] * decay[ua[q]];
    out[a] = s;
  }
  return out;
}

ClosedFormSolution build_closed_form(const RateSystem& rates, double tol) { return build(rates, tol, true); }

DegeneracyReport detect_degeneracy(const RateSystem& rates, double tol) {
  Builder b(rates, tol, true);
  b.run();
  return b.take_report();
}

const IncidenceElement& eta(const ClosedFormSolution& sol, GroundSet u) { return sol.eta(u); }
double psi(const ClosedFormSolution& sol, GroundSet u, const Partition& a) { return sol.psi(u, a); }
CoefficientVector evaluate(const ClosedFormSolution& sol, GroundSet u, double t) { return sol.evaluate(u, t); }

double chi(const RateSystem& rates, GroundSet u, const Partition& a) {
  if (a.ground() != u) throw DomainError("chi: partition is not on u");
  const RateSystem& r = rates.marginal(u);
  const Lattice& lat = r.lattice();
  double inside = 0.0;
  for (Index b : lat.upper(lat.index_of(a))) inside += r.rate(b);
  return rates.total() - inside;
}

double psi(const RateSystem& rates, GroundSet u, const Partition& a) {
  if (a.ground() != u) throw DomainError("psi: partition is not on u");
  if (!u.is_subset_of(rates.ground())) throw DomainError("psi: u is not a subset of the ground set");
  double s = 0.0;
  for (SiteMask blk : a.blocks()) {
    if (site_count(blk) == 1) continue;
    const RateSystem& r = rates.marginal(GroundSet(blk));
    s += rates.total() - r.rate(r.lattice().top());
  }
  return s;
}

int kappa(const Partition& a, const Partition& b) {
  if (a.ground() != b.ground()) throw DomainError("kappa: ground sets differ");
  int k = static_cast<int>(a.block_count());
  for (SiteMask blk : a.blocks())
    if (restrict(b, GroundSet(blk)).is_coarsest()) --k;
  return k;
}

CoefficientVector linear_solution(const RateSystem& rates, GroundSet u, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("linear_solution: time must be finite and nonnegative");
  const RateSystem& r = rates.marginal(u);
  const Lattice& lat = r.lattice();
  std::vector<double> decay(lat.size());
  for (Index b = 0; b < lat.size(); ++b) {
    double inside = 0.0;
    for (Index c : lat.upper(b)) inside += r.rate(c);
    decay[b] = std::exp(-(rates.total() - inside) * t);
  }
  CoefficientVector out(r.lattice_ptr());
  for (Index a = 0; a < lat.size(); ++a) {
    auto ua = lat.upper(a);
    auto mu = lat.mobius_row(a);
    double s = 0.0;
    for (std::size_t q = 0; q < ua.size(); ++q) s += static_cast<double>(mu[q]) * decay[ua[q]];
    out[a] = s;
  }
  return out;
}

CoefficientVector rho_from_chi(const CoefficientVector& chi_table, double rho_total) {
  const Lattice& lat = chi_table.lattice();
  CoefficientVector out(chi_table.lattice_ptr());
  for (Index b = 0; b < lat.size(); ++b) {
    auto ub = lat.upper(b);
    auto mu = lat.mobius_row(b);
    double s = b == lat.top() ? rho_total : 0.0;
    for (std::size_t q = 0; q < ub.size(); ++q) s -= static_cast<double>(mu[q]) * chi_table[ub[q]];
    out[b] = s;
  }
  return out;
}

CoefficientVector rho_from_chi(const std::map<Partition, double>& chi_table, double rho_total, GroundSet u) {
  auto lat = Lattice::of(u);
  std::vector<double> v(lat->size(), 0.0);
  std::vector<bool> seen(lat->size(), false);
  for (const auto& [p, x] : chi_table) {
    Index i = lat->index_of(p);
    seen[i] = true;
    v[i] = x;
  }
  for (Index i = 0; i < lat->size(); ++i)
    if (!seen[i]) throw DomainError(fmt::format("rho_from_chi: no chi value for {}", lat->at(i).to_string()));
  return rho_from_chi(CoefficientVector(lat, std::move(v)), rho_total);
}

CoefficientVector rho_from_theta_psi(const ClosedFormSolution& sol, GroundSet u) {
  const IncidenceElement& th = sol.theta(u);
  auto ps = sol.psi(u);
  const Lattice& lat = th.lattice();
  CoefficientVector out(th.lattice_ptr());
  for (Index a = 0; a < lat.size(); ++a) {
    auto ua = lat.upper(a);
    auto row = th.row(a);
    double s = a == lat.top() ? sol.rates().total() : 0.0;
    for (std::size_t q = 0; q < ua.size(); ++q) s -= row[q] * ps[ua[q]];
    out[a] = s;
  }
  return out;
}

double b_function(const ClosedFormSolution& sol, GroundSet u, const Partition& a, double t) {
  const IncidenceElement& et = sol.eta(u);
  const Lattice& lat = et.lattice();
  const Index ia = lat.index_of(a);
  const CoefficientVector at = sol.evaluate(u, t);
  auto ua = lat.upper(ia);
  auto row = et.row(ia);
  double s = 0.0;
  for (std::size_t q = 0; q < ua.size(); ++q) s += row[q] * at[ua[q]];
  return s;
}

double E0(double alpha, double beta, double t) {
  if (!(alpha >= 0.0 && beta >= 0.0 && t >= 0.0)) throw DomainError("E0: arguments must be nonnegative");
  const double lo = std::min(alpha, beta), hi = std::max(alpha, beta);
  const double d = hi - lo;
  if (d == 0.0) return t * std::exp(-alpha * t);
  return -std::exp(-lo * t) * std::expm1(-d * t) / d;
}

double Em(double rho, double sigma, int m, double t) {
  if (!(rho >= 0.0 && sigma >= 0.0 && t >= 0.0) || m < 0) throw DomainError("Em: arguments must be nonnegative");
  if (m > 20) throw DomainError("Em: m is capped at 20");
  if (t == 0.0) return 0.0;
  const double k = rho - sigma;
  const double mf = static_cast<double>(m);
  const double log_t = std::log(t);
  if (k == 0.0) return std::exp(-rho * t + (mf + 1.0) * log_t - std::lgamma(mf + 2.0));

  if (std::abs(k) * t <= 30.0 + mf) {
    // Positive-term series; no cancellation.
    double sum = 0.0;
    if (k > 0.0) {
      double p = 1.0;  // (kt)^j / j!
      for (int j = 0; j < 2000; ++j) {
        const double term = p / (mf + 1.0 + j);
        sum += term;
        if (term <= 1e-18 * sum && j > k * t) break;
        p *= k * t / (j + 1);
      }
      return std::exp(-rho * t + (mf + 1.0) * log_t - std::lgamma(mf + 1.0)) * sum;
    }
    const double c = -k;
    double q = std::exp(-std::lgamma(mf + 2.0));  // (ct)^j / (m+1+j)!
    for (int j = 0; j < 2000; ++j) {
      sum += q;
      if (q <= 1e-18 * sum && j > c * t) break;
      q *= c * t / (mf + 2.0 + j);
    }
    return std::exp(-sigma * t + (mf + 1.0) * log_t) * sum;
  }

  // Closed form; one exponential dominates and the alternating sum is short.
  double s = std::exp(-rho * t) * ((m + 1) % 2 == 0 ? 1.0 : -1.0) / std::pow(k, mf + 1.0);
  double acc = 0.0;
  for (int l = 0; l <= m; ++l) {
    const double sign = l % 2 == 0 ? 1.0 : -1.0;
    acc += sign * std::exp((m - l) * log_t - std::lgamma(m - l + 1.0)) / std::pow(k, l + 1.0);
  }
  return s + std::exp(-sigma * t) * acc;
}

namespace reference {

ClosedFormSolution build_closed_form(const RateSystem& rates, double tol) { return build(rates, tol, false); }

}  // namespace reference

}  // namespace recomb
