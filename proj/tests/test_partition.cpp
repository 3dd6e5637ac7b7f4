#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "relq/partition.hpp"

using namespace relq;
using namespace relq::testing;

TEST_CASE("event table validates names and size") {
    CHECK(EventTable({"A", "B"}).size() == 2);
    CHECK(EventTable({"A"}).atom_count() == 2);
    CHECK_THROWS_AS(EventTable({}), DomainError);
    CHECK_THROWS_AS(EventTable({"A", "A"}), DomainError);
    CHECK_THROWS_AS(EventTable({"2bad"}), DomainError);
    CHECK_THROWS_AS(EventTable({"has space"}), DomainError);
    std::vector<std::string> many;
    for (int i = 0; i < 17; ++i) many.push_back("e" + std::to_string(i));
    CHECK_THROWS_AS(EventTable(many), DomainError);
    many.pop_back();
    CHECK(EventTable(many).atom_count() == 65536);
}

TEST_CASE("atom encoding: first event is the most significant bit") {
    const EventTable t({"A", "B"});
    // A true at atoms 0b10, 0b11
    CHECK(atoms_of(BoolExpr::event("A"), t).indices() == std::vector<std::size_t>{2, 3});
    CHECK(atoms_of(BoolExpr::event("B"), t).indices() == std::vector<std::size_t>{1, 3});
    CHECK(atoms_of(BoolExpr::always(), t).indices() == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(atoms_of(BoolExpr::event("A") & BoolExpr::event("B"), t).indices() ==
          std::vector<std::size_t>{3});
    CHECK(atoms_of(BoolExpr::never(), t).count() == 0);
}

TEST_CASE("atoms_of reports unknown leaves") {
    const EventTable t({"A"});
    CHECK_THROWS_WITH_AS(atoms_of(BoolExpr::event("Z"), t), doctest::Contains("Z"), NameError);
}

TEST_CASE("prob sums atoms and respects complements") {
    const EventTable t({"A", "B"});
    const Distribution uni = Distribution::uniform(4);
    CHECK(prob(uni, atoms_of(BoolExpr::event("A"), t)) == doctest::Approx(0.5));

    const Distribution d = dist_from_2x2(0.4, 0.1, 0.2, 0.3);
    CHECK(prob(d, atoms_of(BoolExpr::event("A"), t)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(prob(d, atoms_of(BoolExpr::event("B"), t)) == doctest::Approx(0.6).epsilon(1e-12));

    CHECK_THROWS_AS(prob(d, AtomMask(8)), DimensionError);
}

TEST_CASE("dist_from_2x2 layout and validation") {
    const Distribution d = dist_from_2x2(0.4, 0.1, 0.2, 0.3);
    // atom order: 0b00=w, 0b01=z, 0b10=y, 0b11=x
    CHECK(d[0] == doctest::Approx(0.3));
    CHECK(d[1] == doctest::Approx(0.2));
    CHECK(d[2] == doctest::Approx(0.1));
    CHECK(d[3] == doctest::Approx(0.4));

    const Distribution u = dist_from_2x2(0.25, 0.25, 0.25, 0.25);
    for (std::size_t a = 0; a < 4; ++a) CHECK(u[a] == doctest::Approx(0.25));

    CHECK_THROWS_AS(dist_from_2x2(0.5, 0.5, 0.1, 0.0), DomainError);
    CHECK_THROWS_AS(dist_from_2x2(-0.1, 0.5, 0.3, 0.3), DomainError);
}

TEST_CASE("distribution renormalizes inputs within tolerance") {
    const Distribution d({0.25, 0.25, 0.25, 0.25 + 5e-10});
    double sum = 0.0;
    for (std::size_t a = 0; a < d.size(); ++a) sum += d[a];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(Distribution({0.5, 0.6}), DomainError);
    CHECK_THROWS_AS(Distribution({1.5, -0.5}), DomainError);
}

TEST_CASE("tree evaluation matches brute force on random expressions") {
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("e" + std::to_string(i));
        const EventTable t(names);
        std::mt19937_64 rng(1000 + n);
        for (int trial = 0; trial < 200; ++trial) {
            const BoolExpr e = random_expr(rng, t);
            const AtomMask m = atoms_of(e, t);
            for (std::size_t a = 0; a < t.atom_count(); ++a)
                REQUIRE(m.test(a) == eval_brute(e, t, a));
        }
    }
}

TEST_CASE("mask algebra matches expression algebra") {
    const EventTable t({"A", "B", "C"});
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const BoolExpr e1 = random_expr(rng, t);
        const BoolExpr e2 = random_expr(rng, t);
        const AtomMask m1 = atoms_of(e1, t), m2 = atoms_of(e2, t);
        CHECK(atoms_of(e1 & e2, t) == (m1 & m2));
        CHECK(atoms_of(e1 | e2, t) == (m1 | m2));
        CHECK(atoms_of(e1 ^ e2, t) == (m1 ^ m2));
        CHECK(atoms_of(!e1, t) == ~m1);
    }
}

TEST_CASE("probability of an expression and its negation sum to 1") {
    const EventTable t({"A", "B", "C"});
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Distribution d = random_positive_dist(rng, t.atom_count());
        const BoolExpr e = random_expr(rng, t);
        const double p = prob(d, atoms_of(e, t));
        const double q = prob(d, atoms_of(!e, t));
        CHECK(close(p + q, 1.0, 1e-12));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0 + 1e-12);
    }
}
