#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "recomb/coefficients.hpp"
#include "recomb/lattice.hpp"

namespace recomb {

inline constexpr double kDefaultDegeneracyTol = 1e-9;

struct DegeneratePair {
  enum class Kind { bad, harmless };
  GroundSet subset;
  Partition first;
  Partition second;
  double psi_first;
  double psi_second;
  Kind kind;
};

/// Coinciding decay rates per subsystem, smallest subsystems first. A pair
/// (B, 1̲) is `bad` when the recursion for B has a nonvanishing numerator (or
/// the subsystem sits on top of a bad one); a coincidence whose numerators all
/// vanish is removable and counted as `harmless`.
struct DegeneracyReport {
  double tolerance = kDefaultDegeneracyTol;
  /// Listed pairs, capped at kMaxListed; the counts below are exact.
  std::vector<DegeneratePair> pairs;
  std::size_t pair_count = 0;
  std::size_t bad_count = 0;

  static constexpr std::size_t kMaxListed = 10000;

  bool generic() const { return pair_count == 0; }
  bool has_bad() const { return bad_count > 0; }
};

class DegeneracyError : public std::runtime_error {
 public:
  explicit DegeneracyError(DegeneracyReport report);
  const DegeneracyReport& report() const { return report_; }

 private:
  DegeneracyReport report_;
};

/// Decay rates ψ^U and coefficients θ^U for every nonempty U ⊆ S, giving
/// a^U_t(A) = Σ_{B ≽ A} θ^U(A, B) e^{-ψ^U(B) t}. Immutable once built.
class ClosedFormSolution {
 public:
  const RateSystem& rates() const { return rates_; }
  GroundSet ground() const { return rates_.ground(); }
  const DegeneracyReport& report() const { return report_; }

  /// ψ^U indexed like Lattice::of(u).
  std::span<const double> psi(GroundSet u) const;
  double psi(GroundSet u, const Partition& a) const;
  const IncidenceElement& theta(GroundSet u) const;
  /// Inverse of θ^U in the incidence algebra, computed on first use.
  const IncidenceElement& eta(GroundSet u) const;

  CoefficientVector evaluate(GroundSet u, double t) const;
  CoefficientVector evaluate(double t) const { return evaluate(ground(), t); }

  struct Table;
  ClosedFormSolution(RateSystem rates, std::map<SiteMask, std::unique_ptr<Table>> tables, DegeneracyReport report);
  ClosedFormSolution(ClosedFormSolution&&) noexcept;
  ClosedFormSolution& operator=(ClosedFormSolution&&) noexcept;
  ~ClosedFormSolution();

 private:
  const Table& table(GroundSet u) const;

  RateSystem rates_;
  std::map<SiteMask, std::unique_ptr<Table>> tables_;
  DegeneracyReport report_;
};

/// Builds all tables bottom-up over subset size. Throws DegeneracyError when
/// a bad coincidence ψ^U(B) = ψ^U(1̲) is found; removable coincidences are
/// accepted and listed in the report.
ClosedFormSolution build_closed_form(const RateSystem& rates, double tol = kDefaultDegeneracyTol);

/// Same classification as build_closed_form, without throwing.
DegeneracyReport detect_degeneracy(const RateSystem& rates, double tol = kDefaultDegeneracyTol);

const IncidenceElement& eta(const ClosedFormSolution& sol, GroundSet u);
double psi(const ClosedFormSolution& sol, GroundSet u, const Partition& a);
CoefficientVector evaluate(const ClosedFormSolution& sol, GroundSet u, double t);

/// χ^U(A) = Σ_{B ∉ [A, 1̲]} ϱ^U(B)
double chi(const RateSystem& rates, GroundSet u, const Partition& a);
/// ψ^U(A) = Σ_i ψ^{A_i}(1̲) with ψ^V(1̲) = ϱ_Σ - ϱ^V(1̲).
double psi(const RateSystem& rates, GroundSet u, const Partition& a);
/// |A| - #{i : B|_{A_i} = 1̲}
int kappa(const Partition& a, const Partition& b);

/// a^lin_t on U: Σ_{B ≽ A} μ(A, B) e^{-χ^U(B) t}.
CoefficientVector linear_solution(const RateSystem& rates, GroundSet u, double t);

/// ϱ(B) = δ(B, 1̲) ϱ_Σ - Σ_{C ≽ B} μ(B, C) χ(C)
CoefficientVector rho_from_chi(const CoefficientVector& chi_table, double rho_total);
/// Same, from a partition-keyed table that must cover all of ℙ(u).
CoefficientVector rho_from_chi(const std::map<Partition, double>& chi_table, double rho_total, GroundSet u);

/// ϱ(A) = ϱ_Σ δ(A, 1̲) - Σ_{B ≽ A} θ(A, B) ψ(B)
CoefficientVector rho_from_theta_psi(const ClosedFormSolution& sol, GroundSet u);

/// b^U_t(A) = Σ_{B ≽ A} η^U(A, B) a^U_t(B)
double b_function(const ClosedFormSolution& sol, GroundSet u, const Partition& a, double t);

/// (e^{-βt} - e^{-αt}) / (α - β), or t e^{-αt} when α = β.
double E0(double alpha, double beta, double t);
/// e^{-ρt} ∫_0^t τ^m/m! e^{(ρ-σ)τ} dτ, for m ≤ 20.
double Em(double rho, double sigma, int m, double t);

}  // namespace recomb
