// Parallel kernels against their serial references.

#include <random>

#include <benchmark/benchmark.h>

#include "recomb/recomb.hpp"
#include "recomb/reference.hpp"

using namespace recomb;

namespace {

RateSystem rates_for(int n) {
  auto lat = Lattice::of(GroundSet::first(n));
  std::mt19937_64 rng(static_cast<std::uint64_t>(n));
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> r(lat->size());
  for (double& x : r) x = u(rng);
  return RateSystem(lat, std::move(r));
}

Measure measure_for(int n, int letters) {
  Measure m(TypeSpace::uniform(n, letters));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& w : m.weights()) w = u(rng);
  return m;
}

Partition pairs(int n) {
  std::vector<SiteMask> blocks;
  for (int s = 0; s < n; s += 2) blocks.push_back(((SiteMask{1} << std::min(2, n - s)) - 1) << s);
  return Partition(std::move(blocks));
}

template <auto F>
void bm_recombinator(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto nu = measure_for(n, 4);
  const auto a = pairs(n);
  for (auto _ : st) benchmark::DoNotOptimize(F(a, nu));
}

template <auto F>
void bm_convolve(benchmark::State& st) {
  auto lat = Lattice::of(GroundSet::first(static_cast<int>(st.range(0))));
  const auto z = IncidenceElement::zeta(lat);
  const auto m = IncidenceElement::mobius(lat);
  for (auto _ : st) benchmark::DoNotOptimize(F(z, m));
}

template <auto F>
void bm_closed_form(benchmark::State& st) {
  const auto r = rates_for(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(F(r, kDefaultDegeneracyTol));
}

template <auto F>
void bm_estimate(benchmark::State& st) {
  const auto r = rates_for(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(F(r, 1.0, 20000, 1));
}

}  // namespace

BENCHMARK(bm_recombinator<&recomb::recombinator>)->Name("recombinator/parallel")->Arg(6)->Arg(8);
BENCHMARK(bm_recombinator<&reference::recombinator>)->Name("recombinator/serial")->Arg(6)->Arg(8);
BENCHMARK(bm_convolve<&recomb::convolve>)->Name("convolve/parallel")->Arg(5)->Arg(6);
BENCHMARK(bm_convolve<&reference::convolve>)->Name("convolve/serial")->Arg(5)->Arg(6);
BENCHMARK(bm_closed_form<&recomb::build_closed_form>)->Name("closed_form/parallel")->Arg(4)->Arg(5);
BENCHMARK(bm_closed_form<&reference::build_closed_form>)->Name("closed_form/serial")->Arg(4)->Arg(5);
BENCHMARK(bm_estimate<&recomb::estimate_distribution>)->Name("estimate/parallel")->Arg(4)->Arg(6);
BENCHMARK(bm_estimate<&reference::estimate_distribution>)->Name("estimate/serial")->Arg(4)->Arg(6);

BENCHMARK_MAIN();
