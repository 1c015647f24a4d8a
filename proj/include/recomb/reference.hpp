#pragma once

// Serial reference versions of the parallel kernels. They follow the
// definitions directly (or the same loops without OpenMP) and exist for
// tests and benchmarks.

#include <cstdint>

#include "recomb/closed_form.hpp"
#include "recomb/coefficients.hpp"
#include "recomb/lattice.hpp"
#include "recomb/measure.hpp"
#include "recomb/partitioning.hpp"

namespace recomb::reference {

/// Triple loop over (a, c, b) with an explicit order test.
IncidenceElement convolve(const IncidenceElement& x, const IncidenceElement& y);

/// Odometer walk over the states.
Measure recombinator(const Partition& a, const Measure& nu);

/// Sum of γ(a; A, B) ϱ(B) with γ evaluated from its definition.
CoefficientVector coefficient_rhs(const CoefficientVector& a, const RateSystem& rates);

/// The same recursion as build_closed_form, on one thread.
ClosedFormSolution build_closed_form(const RateSystem& rates, double tol = kDefaultDegeneracyTol);

/// One loop over replicates; counts match the parallel version exactly.
EmpiricalDistribution estimate_distribution(const RateSystem& rates, double t, std::uint64_t n_samples,
                                            std::uint64_t seed);

}  // namespace recomb::reference
