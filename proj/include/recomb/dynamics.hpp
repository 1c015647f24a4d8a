#pragma once

#include <span>
#include <vector>

#include "recomb/coefficients.hpp"
#include "recomb/measure.hpp"

namespace recomb {

/// γ(q; A, B) = ‖q‖^{1-|B|} Π_i q^{B_i}(A|_{B_i}) for A ≼ B, else 0.
/// q must be nonnegative; q = 0 gives 0.
double gamma(const CoefficientVector& q, const Partition& a, const Partition& b);
double gamma(const CoefficientVector& q, Index a, Index b);

/// β(q; A, B) = Σ_{C ∧ B = A} q(C) for A ≼ B, else 0.
double beta(const CoefficientVector& q, const Partition& a, const Partition& b);
double beta(const CoefficientVector& q, Index a, Index b);

/// Right-hand side of the coefficient system, precomputed for one rate
/// system so it can be evaluated repeatedly without allocation churn.
class CoefficientRhs {
 public:
  explicit CoefficientRhs(const RateSystem& rates);

  /// out(A) = -ϱ_Σ a(A) + Σ_{B ≽ A} γ(a; A, B) ϱ(B). No sign check on `a`.
  void operator()(std::span<const double> a, std::span<double> out) const;

  const RateSystem& rates() const { return *rates_; }

 private:
  struct Term {
    Index b;
    double rate;
    std::vector<GroundSet> blocks;
    std::vector<std::span<const Index>> maps;  // restriction maps onto each block
    std::vector<std::size_t> sub_sizes;
  };
  const RateSystem* rates_;
  std::vector<Term> terms_;
  std::vector<std::vector<std::size_t>> terms_above_;  // per A: positions in terms_ with B ≽ A
};

CoefficientVector coefficient_rhs(const CoefficientVector& a, const RateSystem& rates);

/// Σ_A ϱ(A) (R_A(ω) - ω), entry by entry.
std::vector<double> measure_rhs(const Measure& omega, const RateSystem& rates);

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  /// |Σ state(t) - Σ state(0)|, reported rather than corrected.
  std::vector<double> drift;
};

/// step·ϱ_Σ = 0.05, or 1 when all rates vanish.
double default_step(const RateSystem& rates);
/// `points` equally spaced times from start to end inclusive.
std::vector<double> linspace(double start, double end, std::size_t points);

/// Classical RK4 with fixed step, shortened per grid interval so every grid
/// time is hit exactly. Grid times must be ≥ 0 and strictly increasing; the
/// state at 0 is a0.
Trajectory<CoefficientVector> integrate_coefficients(const RateSystem& rates, const CoefficientVector& a0,
                                                     std::span<const double> grid, double step);
Trajectory<Measure> integrate_measure(const RateSystem& rates, const Measure& omega0, std::span<const double> grid,
                                      double step);

}  // namespace recomb
