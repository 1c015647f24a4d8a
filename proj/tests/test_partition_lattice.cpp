#include <doctest.h>

#include <map>
#include <set>

#include "recomb/reference.hpp"
#include "support.hpp"

using namespace recomb;
using namespace testing;

TEST_CASE("Bell counts follow the binomial recursion") {
  const auto bell = bell_numbers(10);
  for (int n = 1; n <= 10; ++n) CHECK(Lattice::of(GroundSet::first(n))->size() == bell[static_cast<std::size_t>(n)]);
  CHECK(bell[8] == 4140);
}

TEST_CASE("enumeration matches brute-force insertion") {
  for (SiteMask m : {0b1u, 0b111u, 0b1101u, 0b1011010u}) {
    const GroundSet g(m);
    std::set<Partition> brute;
    for (auto& blocks : brute_partitions(g.sites())) brute.insert(Partition(blocks));
    const auto listed = enumerate_partitions(g);
    CHECK(std::set<Partition>(listed.begin(), listed.end()) == brute);
    CHECK(listed.size() == brute.size());
    CHECK(listed.front().is_coarsest());
    CHECK(listed.back().is_finest());
  }
  CHECK_THROWS_AS(GroundSet(0), DomainError);
}

TEST_CASE("index_of inverts at, also on grounds not starting at 1") {
  for (SiteMask m : {0b11111u, 0b1011010u, 0b1100000110u}) {
    auto lat = Lattice::of(GroundSet(m));
    for (Index i = 0; i < lat->size(); ++i) CHECK(lat->index_of(lat->at(i)) == i);
  }
  CHECK_THROWS_AS(Lattice::of(GroundSet::first(3))->index_of(Partition::parse("1|2")), DomainError);
}

TEST_CASE("two-block count") {
  CHECK(count_two_block(1) == 0);
  CHECK(count_two_block(4) == 7);
  CHECK(count_two_block(6) == 31);
  for (int n = 1; n <= 8; ++n) {
    auto lat = Lattice::of(GroundSet::first(n));
    std::uint64_t k = 0;
    for (const auto& p : lat->elements()) k += p.block_count() == 2;
    CHECK(k == count_two_block(n));
  }
}

TEST_CASE("text format") {
  const auto p = Partition::parse(" 3,4 | 2 |1 ");
  CHECK(p.to_string() == "1|2|3,4");
  CHECK(Partition::parse(p.to_string()) == p);
  CHECK_THROWS_AS(Partition::parse("1,2|2,3"), DomainError);
  CHECK_THROWS_AS(Partition::parse("1,,2"), DomainError);
  CHECK_THROWS_AS(Partition::parse("1||2"), DomainError);
  CHECK_THROWS_AS(Partition::parse("1|3", GroundSet::first(3)), DomainError);
  CHECK_THROWS_AS(Partition::parse("0|1"), DomainError);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto q = random_partition(GroundSet::first(7), rng);
    CHECK(Partition::parse(q.to_string()).to_string() == q.to_string());
  }
}

TEST_CASE("refinement is a partial order and agrees with the brute check, n <= 5") {
  for (int n = 1; n <= 5; ++n) {
    auto lat = Lattice::of(GroundSet::first(n));
    const auto& e = lat->elements();
    const std::size_t N = e.size();
    for (std::size_t i = 0; i < N; ++i) {
      CHECK(is_refinement(e[i], e[i]));
      for (std::size_t j = 0; j < N; ++j) {
        const bool ij = is_refinement(e[i], e[j]);
        REQUIRE(ij == brute_refines(e[i].blocks(), e[j].blocks()));
        REQUIRE(ij == lat->leq(static_cast<Index>(i), static_cast<Index>(j)));
        if (ij && i != j) REQUIRE(!is_refinement(e[j], e[i]));
        if (!ij) continue;
        for (std::size_t k = 0; k < N; ++k)
          if (is_refinement(e[j], e[k])) REQUIRE(is_refinement(e[i], e[k]));
      }
    }
  }
  CHECK(is_refinement(Partition::parse("1|2|3"), Partition::parse("1,2|3")));
  CHECK_FALSE(is_refinement(Partition::parse("1,2|3"), Partition::parse("1|2,3")));
  CHECK_THROWS_AS(is_refinement(Partition::parse("1|2"), Partition::parse("1|2|3")), DomainError);
}

TEST_CASE("up-sets and down-sets match leq") {
  auto lat = Lattice::of(GroundSet::first(5));
  for (Index i = 0; i < lat->size(); ++i) {
    std::size_t up = 0, down = 0;
    for (Index j = 0; j < lat->size(); ++j) {
      up += lat->leq(i, j);
      down += lat->leq(j, i);
    }
    CHECK(lat->upper(i).size() == up);
    CHECK(lat->lower(i).size() == down);
    CHECK(lat->upper(i).back() == i);
    CHECK(lat->lower(i).front() == i);
  }
}

TEST_CASE("meet is the greatest lower bound, n <= 5") {
  for (int n = 1; n <= 5; ++n) {
    auto lat = Lattice::of(GroundSet::first(n));
    const auto& e = lat->elements();
    for (const auto& a : e)
      for (const auto& b : e) {
        const Partition m = meet(a, b);
        REQUIRE(is_refinement(m, a));
        REQUIRE(is_refinement(m, b));
        REQUIRE(meet(b, a) == m);
        for (const auto& c : e)
          if (is_refinement(c, a) && is_refinement(c, b)) REQUIRE(is_refinement(c, m));
      }
  }
  CHECK(meet(Partition::parse("1,2|3,4"), Partition::parse("1|2,3,4")) == Partition::parse("1|2|3,4"));
  const auto g = GroundSet::first(3);
  CHECK(meet_of_set({}, g).is_coarsest());
  std::vector<Partition> p2;
  for (const auto& p : Lattice::of(g)->elements())
    if (p.block_count() == 2) p2.push_back(p);
  CHECK(meet_of_set(p2, g).is_finest());
}

TEST_CASE("restrict and join_disjoint") {
  CHECK(restrict(Partition::parse("1,3|2,4"), GroundSet::parse("1,2")) == Partition::parse("1|2"));
  CHECK(restrict(Partition::parse("1,4|2,3"), GroundSet::parse("2,3,4")) == Partition::parse("2,3|4"));
  CHECK_THROWS_AS(restrict(Partition::parse("1|2"), GroundSet::parse("3")), DomainError);
  const auto p1 = Partition::parse("1,2"), p2 = Partition::parse("3|4");
  const Partition j = join_disjoint(std::vector{p1, p2});
  CHECK(j == Partition::parse("1,2|3|4"));
  CHECK(restrict(j, p1.ground()) == p1);
  CHECK_THROWS_AS(join_disjoint(std::vector{p1, p1}), DomainError);

  for (int n = 1; n <= 4; ++n) {
    const auto g = GroundSet::first(n);
    auto lat = Lattice::of(g);
    for_each_subset(g, [&](GroundSet u) {
      auto sub = Lattice::of(u);
      const auto map = lat->restriction_map(u);
      for (Index a = 0; a < lat->size(); ++a) {
        const Partition ra = restrict(lat->at(a), u);
        REQUIRE(sub->at(map[a]) == ra);
        for (Index b : lat->upper(a)) REQUIRE(is_refinement(ra, restrict(lat->at(b), u)));
      }
    });
  }
}

TEST_CASE("Mobius function equals the inverse of the zeta matrix, n <= 5") {
  for (int n = 1; n <= 5; ++n) {
    auto lat = Lattice::of(GroundSet::first(n));
    const auto& e = lat->elements();
    const std::size_t N = e.size();
    std::vector<std::vector<double>> z(N, std::vector<double>(N, 0.0));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) z[i][j] = brute_refines(e[i].blocks(), e[j].blocks()) ? 1.0 : 0.0;
    const auto inv = invert(z);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        REQUIRE(static_cast<double>(lat->mobius(static_cast<Index>(i), static_cast<Index>(j))) ==
                doctest::Approx(inv[i][j]).epsilon(1e-12));
    // Both summation identities.
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        std::int64_t left = 0, right = 0;
        for (std::size_t c = 0; c < N; ++c) {
          if (!(z[i][c] != 0.0 && z[c][j] != 0.0)) continue;
          left += lat->mobius(static_cast<Index>(i), static_cast<Index>(c));
          right += lat->mobius(static_cast<Index>(c), static_cast<Index>(j));
        }
        REQUIRE(left == (i == j));
        REQUIRE(right == (i == j));
      }
  }
  CHECK(mobius(Partition::parse("1|2|3"), Partition::parse("1,2,3")) == 2);
  CHECK(mobius(Partition::parse("1,2|3"), Partition::parse("1|2,3")) == 0);
  // μ(0̲, 1̲) = (-1)^{n-1} (n-1)!
  std::int64_t f = 1;
  for (int n = 1; n <= 8; ++n) {
    if (n > 1) f *= -(n - 1);
    auto lat = Lattice::of(GroundSet::first(n));
    CHECK(lat->mobius(lat->bottom(), lat->top()) == f);
  }
}

TEST_CASE("incidence algebra convolution") {
  for (int n = 1; n <= 4; ++n) {
    auto lat = Lattice::of(GroundSet::first(n));
    const auto d = IncidenceElement::delta(lat), z = IncidenceElement::zeta(lat), mu = IncidenceElement::mobius(lat);
    const auto zm = convolve(z, mu), mz = convolve(mu, z), zz = convolve(z, z);
    for (Index a = 0; a < lat->size(); ++a)
      for (Index b = 0; b < lat->size(); ++b) {
        CHECK(zm(a, b) == d(a, b));
        CHECK(mz(a, b) == d(a, b));
        std::size_t interval = 0;
        for (Index c = 0; c < lat->size(); ++c) interval += lat->leq(a, c) && lat->leq(c, b);
        CHECK(zz(a, b) == static_cast<double>(interval));
      }
  }
  Rng rng(11);
  auto lat = Lattice::of(GroundSet::first(5));
  IncidenceElement x(lat), y(lat);
  for (Index a = 0; a < lat->size(); ++a)
    for (Index b : lat->upper(a)) {
      x.set(a, b, uniform(rng, -1, 1));
      y.set(a, b, uniform(rng, -1, 1));
    }
  const auto fast = convolve(x, y), slow = reference::convolve(x, y), dx = convolve(IncidenceElement::delta(lat), x);
  for (Index a = 0; a < lat->size(); ++a) {
    CHECK(max_abs(fast.row(a), slow.row(a)) < 1e-12);
    CHECK(max_abs(dx.row(a), x.row(a)) == 0.0);
  }
  CHECK_THROWS_AS(x.set(lat->top(), lat->bottom(), 1.0), DomainError);
  CHECK_THROWS_AS(convolve(x, IncidenceElement::delta(Lattice::of(GroundSet::first(4)))), DomainError);
}
