#pragma once

#include <cstddef>
#include <vector>

#include "relq/constraints.hpp"

namespace relq {

/// min (or max) objective . x  subject to  rows (Eq/Ge over x), x >= 0.
/// Callers add the probability-simplex row (sum = 1) themselves when needed.
struct LinearProgramSpec {
    std::size_t num_vars = 0;
    std::vector<LinearConstraint> rows;
    std::vector<double> objective;
    bool maximize = false;
};

struct SimplexOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    double pivot_tol = 1e-10;
    std::size_t max_pivots = 100000;
};

struct SimplexSolution {
    enum class Kind { Optimal, Infeasible, Unbounded };
    Kind kind = Kind::Infeasible;
    double value = 0.0;
    std::vector<double> point; // structural variables, when Optimal
};

/// Dense two-phase tableau simplex with Bland's pivoting rule.
/// Throws NumericError when the pivot cap is exceeded or dimensions mismatch.
SimplexSolution simplex_solve(const LinearProgramSpec& lp, const SimplexOptions& opt = {});

} // namespace relq
