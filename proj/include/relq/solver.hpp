#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relq/constraints.hpp"
#include "relq/program.hpp"
#include "relq/simplex.hpp"

namespace relq {

enum class IntervalStatus {
    Exact,         // endpoints certified by LP solves
    InnerApprox,   // best feasible points found by search; truth contains this
    Infeasible,    // the constraint system has no solution
    UndefinedQuery // a query denominator vanishes on the entire feasible set
};

std::string to_string(IntervalStatus s);

/// Feasible range of a query, with witnesses attaining the endpoints when
/// available.  Endpoints are NaN for Infeasible / UndefinedQuery.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    IntervalStatus status = IntervalStatus::Exact;
    std::optional<Distribution> witness_lo;
    std::optional<Distribution> witness_hi;
};

struct SolveConfig {
    std::uint64_t seed = 42;
    int starts = 64;           // multi-start budget for bilinear systems
    double eps_cond = 1e-9;    // conditioning-event guard
    int penalty_rounds = 5;    // penalty weight x10 per round
    int iters_per_round = 600;
    double rho0 = 1e3;
    double feas_tol = 1e-9;    // candidate acceptance in the nonconvex search
    std::size_t max_pivots = 100000;
};

// Query shapes: a linear form, a ratio of linear forms, or a ratio of
// products of two linear forms (the Quetelet family).
struct LinearForm {
    std::vector<double> c;
};
struct RatioForm {
    std::vector<double> num, den;
};
struct ProductRatioForm {
    std::vector<double> n1, n2, d1, d2;
};
using QueryForm = std::variant<LinearForm, RatioForm, ProductRatioForm>;

/// Build the atom-space form of a query (in the family's main range).
QueryForm query_form(const Query& q, const EventTable& table);

/// Evaluate a form at an atom-probability vector (no guards; may divide by 0).
double eval_query_form(const QueryForm& f, const std::vector<double>& p);

/// Exact min/max of a linear form over the linear constraint polytope
/// (with the implicit simplex constraints).
Interval bounds_linear(const std::vector<double>& query, const ConstraintSet& cs,
                       const SolveConfig& cfg = {});

/// Exact min/max of num/den via the Charnes-Cooper substitution, with
/// den >= eps_cond enforced on the feasible set.
Interval bounds_fractional(const std::vector<double>& num, const std::vector<double>& den,
                           const ConstraintSet& cs, const SolveConfig& cfg = {});

/// Multi-start penalty search for systems with bilinear constraints (or
/// Quetelet-family queries).  Returns the best feasible extremes found,
/// status InnerApprox.  Throws UnknownFeasibilityError when no feasible
/// point is found at all.
Interval bounds_nonconvex(const QueryForm& query, const ConstraintSet& cs,
                          const SolveConfig& cfg = {});

struct QueryResult {
    Query query;
    std::optional<Interval> interval; // empty when `error` is set
    std::string error;
};

/// Normalize the program's declarations and bound every query, dispatching
/// to the linear / fractional / nonconvex engines.  Per-query errors are
/// captured without aborting the remaining queries.
std::vector<QueryResult> answer_query(const Program& program, const SolveConfig& cfg = {});

enum class Feasibility { Feasible, Infeasible, Unknown };

struct FeasibilityReport {
    Feasibility verdict = Feasibility::Unknown;
    std::optional<Distribution> witness;
    std::string detail; // e.g. the infeasible core
};

FeasibilityReport check_feasible(const Program& program, const SolveConfig& cfg = {});

/// Labels of a small set of declarations that is already infeasible
/// (deletion filter; linear systems only).
std::vector<std::string> infeasible_core(const Program& program, const SolveConfig& cfg = {});

} // namespace relq
