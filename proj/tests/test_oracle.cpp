#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "relq/dsl.hpp"
#include "relq/oracle.hpp"

using namespace relq;
using namespace relq::testing;

namespace {

OracleConfig fast(long samples, std::uint64_t seed = 42) {
    OracleConfig cfg;
    cfg.samples = samples;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("unconstrained marginal spans nearly the whole unit interval") {
    const Program p = parse("events A, B; query P(A);");
    const auto out = oracle_bounds(p, 0, fast(100000));
    REQUIRE(out.interval.has_value());
    CHECK(out.accepted == 100000);
    CHECK(out.interval->lo < 0.01);
    CHECK(out.interval->hi > 0.99);
}

TEST_CASE("Frechet program: sampled bounds sit inside the analytic interval") {
    const Program p = parse(
        "events A, B; assert P(A) = 0.6; assert P(B) = 0.7; query P(A & B);");
    const auto out = oracle_bounds(p, 0, fast(100000));
    REQUIRE(out.interval.has_value());
    CHECK(out.interval->lo >= 0.3 - 1e-7);
    CHECK(out.interval->hi <= 0.6 + 1e-7);
    CHECK(close(out.interval->lo, 0.3, 0.02));
    CHECK(close(out.interval->hi, 0.6, 0.02));
}

TEST_CASE("independence program: accepted samples pin the joint cell") {
    const Program p = parse(
        "events A, B; assert P(A) = 0.3; assert P(B) = 0.5; assert Q(A|B) = 1; "
        "query P(A & B);");
    const auto out = oracle_bounds(p, 0, fast(50000));
    REQUIRE(out.interval.has_value());
    CHECK(out.accepted > 0);
    CHECK(close(out.interval->lo, 0.15, 1e-3));
    CHECK(close(out.interval->hi, 0.15, 1e-3));
}

TEST_CASE("zero accepted samples is evidence, not a verdict") {
    const Program p = parse(
        "events A; assert P(A) = 0.2; assert P(A) = 0.4; query P(A);");
    const auto out = oracle_bounds(p, 0, fast(2000));
    CHECK(out.accepted == 0);
    CHECK_FALSE(out.interval.has_value());
}

TEST_CASE("a larger budget never shrinks the interval under a fixed seed") {
    const Program p = parse(
        "events A, B; assert P(A) in [0.3, 0.6]; query P(A & B); query P(B);");
    const auto small = oracle_answer(p, fast(10000, 9));
    const auto big = oracle_answer(p, fast(100000, 9));
    for (std::size_t i = 0; i < small.size(); ++i) {
        REQUIRE(small[i].interval.has_value());
        REQUIRE(big[i].interval.has_value());
        CHECK(big[i].interval->lo <= small[i].interval->lo + 1e-9);
        CHECK(big[i].interval->hi >= small[i].interval->hi - 1e-9);
    }
}

TEST_CASE("accepted witnesses satisfy every declaration post hoc") {
    const Program p = parse(
        "events A, B, C;\n"
        "assert P(A) = 0.5; assert P(B|A) = 0.6; exchangeable B, C;\n"
        "query P(B & C);");
    const auto out = oracle_bounds(p, 0, fast(20000));
    REQUIRE(out.interval.has_value());
    for (const auto& w : {out.interval->witness_lo, out.interval->witness_hi}) {
        REQUIRE(w.has_value());
        CHECK(close(prob(*w, atoms_of(BoolExpr::event("A"), p.events)), 0.5, 1e-6));
        const double pba = cond_p(*w, p.events, BoolExpr::event("B"), BoolExpr::event("A")).value();
        CHECK(close(pba, 0.6, 1e-6));
        // exchangeability of B and C: the mixed atoms match
        const auto mask_bc = atoms_of(BoolExpr::event("B") & !BoolExpr::event("C"), p.events);
        const auto mask_cb = atoms_of(!BoolExpr::event("B") & BoolExpr::event("C"), p.events);
        CHECK(close(prob(*w, mask_bc), prob(*w, mask_cb), 1e-6));
    }
}

TEST_CASE("the event cap is enforced") {
    const Program p = parse("events A, B, C, D, E; query P(A);");
    CHECK_THROWS_AS(oracle_answer(p, fast(100)), DomainError);
}

TEST_CASE("S-range queries come back in S units") {
    const Program p = parse("events A, B; assert Q(A|B) in [1, 6]; query QS(A|B);");
    const auto out = oracle_bounds(p, 0, fast(50000));
    REQUIRE(out.interval.has_value());
    CHECK(out.interval->lo >= -1e-7);
    CHECK(out.interval->hi <= 5.0 / 7.0 + 1e-7);
}

TEST_CASE("determinism: same seed, same interval") {
    const Program p = parse("events A, B; assert P(A) = 0.6; query P(A & B);");
    const auto a = oracle_bounds(p, 0, fast(20000, 3));
    const auto b = oracle_bounds(p, 0, fast(20000, 3));
    REQUIRE(a.interval.has_value());
    REQUIRE(b.interval.has_value());
    CHECK(a.interval->lo == b.interval->lo);
    CHECK(a.interval->hi == b.interval->hi);
    CHECK(a.accepted == b.accepted);
}
