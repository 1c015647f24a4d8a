#include <doctest.h>

#include <sstream>

#include "recomb/reference.hpp"
#include "support.hpp"

using namespace recomb;
using namespace testing;

namespace {

Measure two_by_two() { return Measure(TypeSpace::uniform(2, 2), {0.1, 0.2, 0.3, 0.4}); }

}  // namespace

TEST_CASE("type space indexing is row-major with the lowest site slowest") {
  TypeSpace s(GroundSet::parse("2,5,7"), {2, 3, 4});
  CHECK(s.state_count() == 24);
  CHECK(s.encode(std::vector{1, 2, 3}) == 23);
  CHECK(s.encode(std::vector{1, 0, 0}) == 12);
  for (std::size_t x = 0; x < s.state_count(); ++x) CHECK(s.encode(s.decode(x)) == x);
  CHECK(s.alphabet_size(5) == 3);
  CHECK_THROWS_AS(TypeSpace(GroundSet::first(2), {2, 0}), DomainError);
  CHECK_THROWS_AS(TypeSpace(GroundSet::first(2), {2}), DomainError);
}

TEST_CASE("norm and projection") {
  CHECK(norm(Measure(TypeSpace::uniform(3, 2))) == 0.0);
  CHECK(norm(Measure::uniform(TypeSpace::uniform(2, 2))) == doctest::Approx(1.0));
  const auto nu = two_by_two();
  const auto p1 = project(nu, GroundSet::parse("1"));
  CHECK(p1[0] == doctest::Approx(0.3));
  CHECK(p1[1] == doctest::Approx(0.7));
  const auto p2 = project(nu, GroundSet::parse("2"));
  CHECK(p2[0] == doctest::Approx(0.4));
  CHECK(p2[1] == doctest::Approx(0.6));
  CHECK(l1_distance(project(nu, nu.space().sites()), nu) == 0.0);
  CHECK_THROWS_AS(project(nu, GroundSet::parse("3")), DomainError);
}

TEST_CASE("recombinator by hand and against the definition") {
  const auto nu = two_by_two();
  const auto r = recombinator(Partition::parse("1|2"), nu);
  const double want[] = {0.3 * 0.4, 0.3 * 0.6, 0.7 * 0.4, 0.7 * 0.6};
  for (std::size_t i = 0; i < 4; ++i) CHECK(r[i] == doctest::Approx(want[i]).epsilon(1e-15));
  CHECK(l1_distance(recombinator(Partition::parse("1,2"), nu), nu) == 0.0);
  CHECK(norm(recombinator(Partition::parse("1|2"), Measure(nu.space()))) == 0.0);
  Measure neg = nu;
  neg[0] = -0.1;
  CHECK_THROWS_AS(recombinator(Partition::parse("1|2"), neg), DomainError);
  CHECK_THROWS_AS(recombinator(Partition::parse("1|2|3"), nu), DomainError);

  Rng rng(3);
  TypeSpace space(GroundSet::first(4), {2, 3, 2, 2});
  auto lat = Lattice::of(space.sites());
  for (int rep = 0; rep < 5; ++rep) {
    const auto m = random_measure(space, rng, rep % 2 == 0);
    for (const auto& a : lat->elements()) {
      const auto fast = recombinator(a, m);
      CHECK(l1_distance(fast, brute_recombinator(a, m)) < 1e-13);
      CHECK(l1_distance(fast, reference::recombinator(a, m)) < 1e-14);
    }
  }
}

TEST_CASE("parallel recombinator matches the reference on a large space") {
  Rng rng(8);
  TypeSpace space = TypeSpace::uniform(8, 4);
  const auto m = random_measure(space, rng);
  for (const char* p : {"1|2|3|4|5|6|7|8", "1,3,5|2,8|4,6,7", "1,2,3,4|5,6,7,8"}) {
    const Partition a = Partition::parse(p);
    CHECK(l1_distance(recombinator(a, m), reference::recombinator(a, m)) < 1e-14);
  }
}

TEST_CASE("recombinator algebra on random measures, n = 4") {
  Rng rng(21);
  TypeSpace space = TypeSpace::uniform(4, 2);
  auto lat = Lattice::of(space.sites());
  for (int rep = 0; rep < 20; ++rep) {
    const auto nu = random_measure(space, rng, false);
    const double scale = norm(nu);
    std::vector<Measure> r;
    for (const auto& a : lat->elements()) r.push_back(recombinator(a, nu));
    for (Index i = 0; i < lat->size(); ++i) {
      const auto& a = lat->at(i);
      CHECK(std::abs(norm(r[i]) - scale) <= 1e-12 * scale);
      CHECK(r[i].is_nonnegative());
      CHECK(l1_distance(recombinator(a, r[i]), r[i]) <= 1e-12 * scale);
      Measure scaled = nu;
      for (double& w : scaled.weights()) w *= 2.5;
      auto rs = recombinator(a, scaled);
      for (double& w : rs.weights()) w /= 2.5;
      CHECK(l1_distance(rs, r[i]) <= 1e-12 * scale);
      for (Index j = 0; j < lat->size(); ++j) {
        const auto& b = lat->at(j);
        REQUIRE(l1_distance(recombinator(a, r[j]), r[lat->index_of(meet(a, b))]) <= 1e-12 * scale);
      }
      for_each_subset(space.sites(), [&](GroundSet u) {
        REQUIRE(l1_distance(project(r[i], u), recombinator(restrict(a, u), project(nu, u))) <= 1e-12 * scale);
      });
    }
  }
}

TEST_CASE("invariant partition set") {
  Rng rng(4);
  const auto prod = Measure::product(TypeSpace::uniform(2, 2), {{0.2, 0.8}, {0.6, 0.4}});
  auto inv = invariant_partition_set(prod);
  CHECK(inv.fixed.size() == 2);
  CHECK(inv.meet.is_finest());
  const auto generic = random_measure(TypeSpace::uniform(3, 2), rng);
  inv = invariant_partition_set(generic);
  REQUIRE(inv.fixed.size() == 1);
  CHECK(inv.fixed.front().is_coarsest());
  CHECK(inv.meet.is_coarsest());
  // Linked pair {1,2}, independent site 3.
  const auto pair = random_measure(TypeSpace::uniform(2, 2), rng);
  const auto site3 = Measure::product(TypeSpace(GroundSet::parse("3"), {2}), {{0.3, 0.7}});
  Measure joint(TypeSpace::uniform(3, 2));
  for (std::size_t x = 0; x < 8; ++x) joint[x] = pair[x / 2] * site3[x % 2];
  inv = invariant_partition_set(joint);
  CHECK(inv.fixed.size() == 2);
  CHECK(inv.meet == Partition::parse("1,2|3"));
  CHECK_THROWS_AS(invariant_partition_set(Measure(TypeSpace::uniform(2, 2))), DomainError);
}

TEST_CASE("mixture") {
  Rng rng(6);
  const TypeSpace space = TypeSpace::uniform(3, 2);
  auto lat = Lattice::of(space.sites());
  const auto nu = random_measure(space, rng);
  CHECK(l1_distance(mixture(CoefficientVector::point(lat, lat->top()), nu), nu) < 1e-15);
  CHECK(l1_distance(mixture(CoefficientVector::point(lat, lat->bottom()), nu),
                    recombinator(lat->at(lat->bottom()), nu)) < 1e-15);
  const auto prod = Measure::product(TypeSpace::uniform(2, 2), {{0.2, 0.8}, {0.6, 0.4}});
  auto lat2 = Lattice::of(GroundSet::first(2));
  CHECK(l1_distance(mixture(CoefficientVector(lat2, {0.5, 0.5}), prod), prod) < 1e-15);
  CoefficientVector q(lat);
  for (Index i = 0; i < lat->size(); ++i) q[i] = 1.0 / static_cast<double>(lat->size());
  CHECK(norm(mixture(q, nu)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(mixture(CoefficientVector::point(lat2, 0), nu), DomainError);
}

TEST_CASE("measure CSV round trip") {
  Rng rng(10);
  const TypeSpace space(GroundSet::parse("1,3,4"), {3, 2, 2});
  const auto nu = random_measure(space, rng);
  std::stringstream io;
  write_measure_csv(io, nu);
  const auto back = read_measure_csv(io, space);
  for (std::size_t i = 0; i < space.state_count(); ++i) CHECK(back[i] == nu[i]);
  std::stringstream bad("x1,x3,x4,weight\n0,0,0,-1\n");
  CHECK_THROWS_AS(read_measure_csv(bad, space), DomainError);
}
