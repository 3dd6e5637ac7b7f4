#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "relq/constraints.hpp"

using namespace relq;
using namespace relq::testing;

namespace {

const EventTable kAB({"A", "B"});
const BoolExpr A = BoolExpr::event("A");
const BoolExpr B = BoolExpr::event("B");
constexpr double kEps = 1e-9;

CoeffAssert eq_assert(CoeffFamily f, BoolExpr a, std::optional<BoolExpr> b, RangeType r,
                      double v) {
    return CoeffAssert{f, std::move(a), std::move(b), r, v, v, false};
}

bool satisfies_all(const std::vector<AtomicConstraint>& cons, const std::vector<double>& p,
                   double tol) {
    for (const auto& c : cons) {
        const bool ok = std::visit([&](const auto& x) { return x.satisfied(p, tol); }, c);
        if (!ok) return false;
    }
    return true;
}

} // namespace

TEST_CASE("marginal equality normalizes to one linear row") {
    const auto cons = normalize(eq_assert(CoeffFamily::P, A, std::nullopt, RangeType::P, 0.3),
                                kAB, kEps);
    REQUIRE(cons.size() == 1);
    const auto& lin = std::get<LinearConstraint>(cons[0]);
    CHECK(lin.rel == Rel::Eq);
    CHECK(lin.rhs == doctest::Approx(0.3));
    CHECK(lin.coeff == std::vector<double>{0, 0, 1, 1}); // atoms of A
}

TEST_CASE("odds equality becomes a probability equality") {
    // O(A) = 3  <=>  P(A) = 0.75
    const auto cons = normalize(eq_assert(CoeffFamily::O, A, std::nullopt, RangeType::O, 3.0),
                                kAB, kEps);
    REQUIRE(cons.size() == 1);
    const auto& lin = std::get<LinearConstraint>(cons[0]);
    CHECK(lin.rhs == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("conditional probability emits the scaled row plus a guard") {
    // P(A|B) = c  =>  P(A&B) - c P(B) = 0,  P(B) >= eps
    const auto cons = normalize(eq_assert(CoeffFamily::CondP, A, B, RangeType::P, 0.9), kAB,
                                kEps);
    REQUIRE(cons.size() == 2);
    const auto& main = std::get<LinearConstraint>(cons[0]);
    CHECK(main.rel == Rel::Eq);
    // atoms: 0b00, 0b01(-A&B), 0b10, 0b11(A&B)
    CHECK(main.coeff[3] == doctest::Approx(1.0 - 0.9));
    CHECK(main.coeff[1] == doctest::Approx(-0.9));
    CHECK(main.coeff[0] == 0.0);
    CHECK(main.coeff[2] == 0.0);
    const auto& guard = std::get<LinearConstraint>(cons[1]);
    CHECK(guard.rel == Rel::Ge);
    CHECK(guard.rhs == doctest::Approx(kEps));
    CHECK(guard.coeff == std::vector<double>{0, 1, 0, 1});
}

TEST_CASE("independence declaration is one bilinear row with two guards") {
    const auto cons = normalize(eq_assert(CoeffFamily::QOdds, A, B, RangeType::O, 1.0), kAB,
                                kEps);
    CHECK(classify(cons) == ConstraintSummary{2, 1});
    const auto& bil = std::get<BilinearConstraint>(cons[0]);
    CHECK(bil.rel == Rel::Eq);
    CHECK(bil.scale == doctest::Approx(1.0));
    CHECK(bil.l1 == std::vector<double>{0, 0, 0, 1}); // x = P(A&B)
    CHECK(bil.l2 == std::vector<double>{1, 0, 0, 0}); // w
    CHECK(bil.l3 == std::vector<double>{0, 0, 1, 0}); // y
    CHECK(bil.l4 == std::vector<double>{0, 1, 0, 0}); // z
}

TEST_CASE("exchangeability equality of marginals via the F family") {
    // F(A:B) = 1  =>  P(A) - P(B) = 0, no guards
    const auto cons = normalize(eq_assert(CoeffFamily::FProb, A, B, RangeType::O, 1.0), kAB,
                                kEps);
    REQUIRE(cons.size() == 1);
    const auto& lin = std::get<LinearConstraint>(cons[0]);
    CHECK(lin.coeff == std::vector<double>{0, -1, 1, 0});
    CHECK(lin.rhs == 0.0);
}

TEST_CASE("S-range assertions convert to the odds range first") {
    // QS(A|B) = 0.5  <=>  Q(A|B) = 3
    const auto cons = normalize(eq_assert(CoeffFamily::QOdds, A, B, RangeType::S, 0.5), kAB,
                                kEps);
    const auto& bil = std::get<BilinearConstraint>(cons[0]);
    CHECK(bil.scale == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("interval assertions emit paired inequalities") {
    const CoeffAssert d{CoeffFamily::P, A, std::nullopt, RangeType::P, 0.2, 0.4, true};
    const auto cons = normalize(d, kAB, kEps);
    CHECK(classify(cons) == ConstraintSummary{2, 0});
    const auto& lo = std::get<LinearConstraint>(cons[0]);
    const auto& hi = std::get<LinearConstraint>(cons[1]);
    CHECK(lo.rel == Rel::Ge);
    CHECK(hi.rel == Rel::Ge);
    const std::vector<double> p1{0.7, 0.0, 0.0, 0.3}; // P(A)=0.3: inside
    const std::vector<double> p2{0.5, 0.0, 0.0, 0.5}; // P(A)=0.5: above
    CHECK(satisfies_all(cons, p1, 1e-9));
    CHECK_FALSE(satisfies_all(cons, p2, 1e-9));

    // infinite upper bounds drop the upper row
    const CoeffAssert q{CoeffFamily::QOdds, A, B, RangeType::O, 1.0,
                        std::numeric_limits<double>::infinity(), true};
    CHECK(classify(normalize(q, kAB, kEps)) == ConstraintSummary{2, 1});
}

TEST_CASE("classify counts the solver-facing classes") {
    std::vector<AtomicConstraint> all;
    for (const auto& c : normalize(eq_assert(CoeffFamily::P, A, std::nullopt, RangeType::P, 0.3),
                                   kAB, kEps))
        all.push_back(c);
    for (const auto& c : normalize(eq_assert(CoeffFamily::FProb, A, B, RangeType::O, 1.0), kAB,
                                   kEps))
        all.push_back(c);
    CHECK(classify(all) == ConstraintSummary{2, 0});

    std::vector<AtomicConstraint> mixed;
    for (const auto& c : normalize(eq_assert(CoeffFamily::QProb, A, B, RangeType::O, 2.0), kAB,
                                   kEps))
        mixed.push_back(c);
    for (const auto& c : normalize(eq_assert(CoeffFamily::P, B, std::nullopt, RangeType::P, 0.5),
                                   kAB, kEps))
        mixed.push_back(c);
    const auto s = classify(mixed);
    CHECK(s.n_bilinear == 1);
    CHECK(s.n_linear == 3); // the marginal plus two Quetelet guards
}

TEST_CASE("boolean definitions zero out the disagreement atoms") {
    const EventTable t3({"A", "B", "C"});
    const auto cons = define_event("C", BoolExpr::event("A") & BoolExpr::event("B"), t3);
    // atoms where bit_C != bit_A & bit_B: 001, 011, 101, 110
    REQUIRE(cons.size() == 4);
    std::vector<std::size_t> zeroed;
    for (const auto& c : cons) {
        const auto& lin = std::get<LinearConstraint>(c);
        CHECK(lin.rel == Rel::Eq);
        CHECK(lin.rhs == 0.0);
        for (std::size_t a = 0; a < 8; ++a)
            if (lin.coeff[a] != 0.0) zeroed.push_back(a);
    }
    CHECK(zeroed == std::vector<std::size_t>{1, 3, 5, 6});

    // define C = TRUE zeroes every atom with bit_C = 0 (even indices)
    const auto cons2 = define_event("C", BoolExpr::always(), t3);
    REQUIRE(cons2.size() == 4);
    std::vector<std::size_t> zeroed2;
    for (const auto& c : cons2)
        for (std::size_t a = 0; a < 8; ++a)
            if (std::get<LinearConstraint>(c).coeff[a] != 0.0) zeroed2.push_back(a);
    CHECK(zeroed2 == std::vector<std::size_t>{0, 2, 4, 6});

    CHECK_THROWS_AS(define_event("C", BoolExpr::event("C") | BoolExpr::event("A"), t3),
                    DomainError);
    CHECK_THROWS_AS(define_event("Z", BoolExpr::event("A"), t3), NameError);
}

TEST_CASE("defining C = A forces the marginals together") {
    const EventTable t3({"A", "B", "C"});
    const auto cons = define_event("C", BoolExpr::event("A"), t3);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Distribution d = random_positive_dist(rng, 8);
        std::vector<double> p = d.values();
        // kill the disagreement atoms and renormalize: now C == A pointwise
        for (const auto& c : cons) {
            const auto& lin = std::get<LinearConstraint>(c);
            for (std::size_t a = 0; a < 8; ++a)
                if (lin.coeff[a] != 0.0) p[a] = 0.0;
        }
        double sum = 0.0;
        for (double v : p) sum += v;
        for (double& v : p) v /= sum;
        const Distribution fixed(p);
        const double pa = prob(fixed, atoms_of(BoolExpr::event("A"), t3));
        const double pc = prob(fixed, atoms_of(BoolExpr::event("C"), t3));
        CHECK(close(pa, pc, 1e-12));
    }
}

TEST_CASE("full exchangeable blocks collapse to popcount classes") {
    for (std::size_t n = 2; n <= 6; ++n) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("e" + std::to_string(i));
        const EventTable t(names);
        const auto cons = expand_exchangeable(ExchBlock{names}, t);
        CHECK(cons.size() == t.atom_count() - (n + 1));
    }
}

TEST_CASE("pair block over two events pins the off-diagonal atoms") {
    const auto cons = expand_exchangeable(ExchBlock{{"A", "B"}}, kAB);
    REQUIRE(cons.size() == 1);
    const auto& lin = std::get<LinearConstraint>(cons[0]);
    CHECK(lin.coeff == std::vector<double>{0, 1, -1, 0}); // P(-A&B) = P(A&-B)
}

TEST_CASE("partial blocks fix the outside bits") {
    const EventTable t3({"A", "B", "C"});
    const auto cons = expand_exchangeable(ExchBlock{{"A", "B"}}, t3);
    REQUIRE(cons.size() == 2);
    // orbit pairs: (010, 100) and (011, 101)
    const auto& c0 = std::get<LinearConstraint>(cons[0]);
    CHECK(c0.coeff[2] == 1.0);
    CHECK(c0.coeff[4] == -1.0);
    const auto& c1 = std::get<LinearConstraint>(cons[1]);
    CHECK(c1.coeff[3] == 1.0);
    CHECK(c1.coeff[5] == -1.0);

    CHECK_THROWS_AS(expand_exchangeable(ExchBlock{{"A"}}, t3), DomainError);
    CHECK_THROWS_AS(expand_exchangeable(ExchBlock{{"A", "Z"}}, t3), NameError);
}

TEST_CASE("normalization is sound: constraints hold iff the coefficient does") {
    const EventTable t3({"A", "B", "C"});
    const BoolExpr a = BoolExpr::event("A"), b = BoolExpr::event("B");
    std::mt19937_64 rng(77);
    const CoeffFamily families[] = {CoeffFamily::P,     CoeffFamily::O,
                                    CoeffFamily::CondP, CoeffFamily::CondO,
                                    CoeffFamily::QOdds, CoeffFamily::QProb,
                                    CoeffFamily::FOdds, CoeffFamily::FProb};
    for (const CoeffFamily f : families) {
        const bool two = family_takes_two_args(f);
        for (int trial = 0; trial < 120; ++trial) {
            const Distribution d = random_positive_dist(rng, 8, 0.05);
            const ExtReal v =
                eval_coefficient(f, d, t3, a, two ? std::optional<BoolExpr>(b) : std::nullopt);
            REQUIRE(v.is_finite());
            const auto on_value = normalize(
                eq_assert(f, a, two ? std::optional<BoolExpr>(b) : std::nullopt,
                          main_range(f), v.value()),
                t3, kEps);
            CHECK(satisfies_all(on_value, d.values(), 1e-9));

            const double off = v.value() + 0.001 * std::max(1.0, v.value());
            const auto off_value = normalize(
                eq_assert(f, a, two ? std::optional<BoolExpr>(b) : std::nullopt,
                          main_range(f), off),
                t3, kEps);
            CHECK_FALSE(satisfies_all(off_value, d.values(), 1e-9));
        }
    }
}

TEST_CASE("normalization accepts compound expressions") {
    const EventTable t3({"A", "B", "C"});
    const BoolExpr e1 = BoolExpr::event("A") | BoolExpr::event("C");
    const BoolExpr e2 = !BoolExpr::event("B");
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const Distribution d = random_positive_dist(rng, 8, 0.05);
        const ExtReal v = eval_coefficient(CoeffFamily::QOdds, d, t3, e1, e2);
        const auto cons = normalize(
            eq_assert(CoeffFamily::QOdds, e1, e2, RangeType::O, v.value()), t3, kEps);
        CHECK(satisfies_all(cons, d.values(), 1e-9));
    }
}

TEST_CASE("normalization is deterministic") {
    const CoeffAssert d{CoeffFamily::QProb, A, B, RangeType::O, 0.5, 2.0, true};
    const auto c1 = normalize(d, kAB, kEps);
    const auto c2 = normalize(d, kAB, kEps);
    REQUIRE(c1.size() == c2.size());
    for (std::size_t i = 0; i < c1.size(); ++i) {
        if (const auto* l1 = std::get_if<LinearConstraint>(&c1[i])) {
            const auto& l2 = std::get<LinearConstraint>(c2[i]);
            CHECK(l1->coeff == l2.coeff);
            CHECK(l1->rhs == l2.rhs);
        } else {
            const auto& b1 = std::get<BilinearConstraint>(c1[i]);
            const auto& b2 = std::get<BilinearConstraint>(c2[i]);
            CHECK(b1.l1 == b2.l1);
            CHECK(b1.scale == b2.scale);
        }
    }
}

TEST_CASE("out-of-range asserted values are rejected") {
    CHECK_THROWS_AS(
        normalize(eq_assert(CoeffFamily::P, A, std::nullopt, RangeType::P, 1.5), kAB, kEps),
        DomainError);
    CHECK_THROWS_AS(
        normalize(eq_assert(CoeffFamily::QOdds, A, B, RangeType::S, -1.5), kAB, kEps),
        DomainError);
}
