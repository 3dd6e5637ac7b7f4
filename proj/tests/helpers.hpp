#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "relq/partition.hpp"

namespace relq::testing {

// Dirichlet(1,...,1) sample mixed with a uniform floor so every atom keeps
// at least `floor`/atoms mass; keeps ratio identities numerically meaningful.
inline Distribution random_positive_dist(std::mt19937_64& rng, std::size_t atoms,
                                         double floor = 0.01) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> p(atoms);
    double sum = 0.0;
    for (auto& v : p) {
        v = expo(rng) + 1e-12;
        sum += v;
    }
    for (auto& v : p) v = (1.0 - floor) * (v / sum) + floor / double(atoms);
    return Distribution(std::move(p));
}

// Independent brute-force evaluation of an expression at one atom, used as
// the reference for atoms_of.
inline bool eval_brute(const BoolExpr& e, const EventTable& t, std::size_t atom) {
    using Kind = BoolExpr::Kind;
    switch (e.kind()) {
        case Kind::True: return true;
        case Kind::False: return false;
        case Kind::Event: {
            const std::size_t i = *t.index_of(e.event_name());
            return (atom >> (t.size() - 1 - i)) & 1u;
        }
        case Kind::Not: return !eval_brute(e.lhs(), t, atom);
        case Kind::And: return eval_brute(e.lhs(), t, atom) && eval_brute(e.rhs(), t, atom);
        case Kind::Or: return eval_brute(e.lhs(), t, atom) || eval_brute(e.rhs(), t, atom);
        case Kind::Xor: return eval_brute(e.lhs(), t, atom) != eval_brute(e.rhs(), t, atom);
    }
    return false;
}

inline BoolExpr random_expr(std::mt19937_64& rng, const EventTable& t, int depth = 3) {
    std::uniform_int_distribution<int> op(0, depth <= 0 ? 1 : 6);
    switch (op(rng)) {
        case 0:
        case 1: {
            std::uniform_int_distribution<int> leaf(0, static_cast<int>(t.size()) + 1);
            const int k = leaf(rng);
            if (k < static_cast<int>(t.size())) return BoolExpr::event(t.name(k));
            return k == static_cast<int>(t.size()) ? BoolExpr::always() : BoolExpr::never();
        }
        case 2: return !random_expr(rng, t, depth - 1);
        case 3:
        case 4: return random_expr(rng, t, depth - 1) & random_expr(rng, t, depth - 1);
        case 5: return random_expr(rng, t, depth - 1) | random_expr(rng, t, depth - 1);
        default: return random_expr(rng, t, depth - 1) ^ random_expr(rng, t, depth - 1);
    }
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// relative comparison against the larger magnitude (and at least 1 ulp scale)
inline bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace relq::testing
