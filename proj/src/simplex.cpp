#include "relq/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relq/errors.hpp"

namespace relq {

namespace {

struct Tableau {
    std::size_t rows = 0;
    std::size_t vars = 0; // variable columns; column `vars` is the rhs
    std::vector<double> a;
    std::vector<int> basis;

    double& at(std::size_t i, std::size_t j) { return a[i * (vars + 1) + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * (vars + 1) + j]; }
    double& rhs(std::size_t i) { return a[i * (vars + 1) + vars]; }
    double rhs(std::size_t i) const { return a[i * (vars + 1) + vars]; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double pv = at(pr, pc);
        for (std::size_t j = 0; j <= vars; ++j) at(pr, j) /= pv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= vars; ++j) at(i, j) -= f * at(pr, j);
            at(i, pc) = 0.0;
        }
        basis[pr] = static_cast<int>(pc);
    }
};

// One simplex phase: Bland's rule, smallest eligible column enters, among
// minimum-ratio rows the smallest basic index leaves.
enum class PhaseOutcome { Optimal, Unbounded };

PhaseOutcome run_phase(Tableau& t, const std::vector<double>& cost,
                       std::size_t enterable_cols, const SimplexOptions& opt,
                       std::size_t& pivots) {
    for (;;) {
        // reduced costs: c_j - c_B . T[., j]
        std::size_t enter = t.vars;
        for (std::size_t j = 0; j < enterable_cols; ++j) {
            double rc = cost[j];
            for (std::size_t i = 0; i < t.rows; ++i) {
                const double cb = cost[t.basis[i]];
                if (cb != 0.0) rc -= cb * t.at(i, j);
            }
            if (rc < -opt.opt_tol) {
                enter = j;
                break; // Bland: first (smallest-index) improving column
            }
        }
        if (enter == t.vars) return PhaseOutcome::Optimal;

        double best_ratio = 0.0;
        std::size_t leave = t.rows;
        for (std::size_t i = 0; i < t.rows; ++i) {
            const double aij = t.at(i, enter);
            if (aij <= opt.pivot_tol) continue;
            const double ratio = std::max(t.rhs(i), 0.0) / aij;
            if (leave == t.rows) {
                best_ratio = ratio;
                leave = i;
                continue;
            }
            const double tie = 1e-12 * (1.0 + best_ratio);
            if (ratio < best_ratio - tie) {
                best_ratio = ratio;
                leave = i;
            } else if (ratio <= best_ratio + tie && t.basis[i] < t.basis[leave]) {
                leave = i; // Bland tie-break on the leaving variable index
                best_ratio = std::min(best_ratio, ratio);
            }
        }
        if (leave == t.rows) return PhaseOutcome::Unbounded;

        t.pivot(leave, enter);
        if (++pivots > opt.max_pivots)
            throw NumericError("simplex pivot cap exceeded (" +
                               std::to_string(opt.max_pivots) + ")");
    }
}

} // namespace

SimplexSolution simplex_solve(const LinearProgramSpec& lp, const SimplexOptions& opt) {
    const std::size_t n = lp.num_vars;
    if (lp.objective.size() != n)
        throw DimensionError("objective has " + std::to_string(lp.objective.size()) +
                             " entries for " + std::to_string(n) + " variables");
    for (const auto& r : lp.rows)
        if (r.coeff.size() != n)
            throw DimensionError("constraint row has " + std::to_string(r.coeff.size()) +
                                 " entries for " + std::to_string(n) + " variables");

    const std::size_t m = lp.rows.size();
    std::size_t n_surplus = 0;
    for (const auto& r : lp.rows)
        if (r.rel == Rel::Ge) ++n_surplus;

    // Columns: structural | surplus | artificial.  Every row without a ready
    // basic column gets an artificial.
    const std::size_t surplus0 = n;
    const std::size_t art0 = n + n_surplus;

    Tableau t;
    t.rows = m;
    t.basis.assign(m, -1);

    // First pass: standard form rows with nonnegative rhs; record which rows
    // can use their surplus column as the initial basic variable.
    std::vector<std::vector<double>> body(m);
    std::vector<double> rhs(m);
    std::vector<int> surplus_col(m, -1);
    std::vector<bool> surplus_basic(m, false);
    {
        std::size_t s = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& r = lp.rows[i];
            body[i].assign(n + n_surplus, 0.0);
            std::copy(r.coeff.begin(), r.coeff.end(), body[i].begin());
            double b = r.rhs;
            if (r.rel == Rel::Ge) {
                surplus_col[i] = static_cast<int>(surplus0 + s);
                body[i][surplus0 + s] = -1.0;
                ++s;
            }
            if (b < 0.0) {
                for (double& v : body[i]) v = -v;
                b = -b;
                if (surplus_col[i] >= 0) surplus_basic[i] = true; // coeff is now +1
            }
            rhs[i] = b;
        }
    }
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (!surplus_basic[i]) ++n_art;

    t.vars = n + n_surplus + n_art;
    t.a.assign(m * (t.vars + 1), 0.0);
    {
        std::size_t art = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n + n_surplus; ++j) t.at(i, j) = body[i][j];
            t.rhs(i) = rhs[i];
            if (surplus_basic[i]) {
                t.basis[i] = surplus_col[i];
            } else {
                t.at(i, art0 + art) = 1.0;
                t.basis[i] = static_cast<int>(art0 + art);
                ++art;
            }
        }
    }

    std::size_t pivots = 0;

    // Phase 1: minimize the sum of artificials.
    if (n_art > 0) {
        std::vector<double> cost(t.vars, 0.0);
        for (std::size_t j = art0; j < t.vars; ++j) cost[j] = 1.0;
        if (run_phase(t, cost, art0, opt, pivots) == PhaseOutcome::Unbounded)
            throw NumericError("phase-1 subproblem reported unbounded");
        double infeas = 0.0;
        for (std::size_t i = 0; i < t.rows; ++i)
            if (t.basis[i] >= static_cast<int>(art0)) infeas += std::max(t.rhs(i), 0.0);
        if (infeas > opt.feas_tol)
            return SimplexSolution{SimplexSolution::Kind::Infeasible, infeas, {}};

        // Drive remaining zero-level artificials out of the basis; rows with
        // no eligible pivot are redundant and get dropped.
        for (std::size_t i = 0; i < t.rows;) {
            if (t.basis[i] < static_cast<int>(art0)) {
                ++i;
                continue;
            }
            std::size_t pc = t.vars;
            for (std::size_t j = 0; j < art0; ++j) {
                if (std::abs(t.at(i, j)) > opt.pivot_tol) {
                    pc = j;
                    break;
                }
            }
            if (pc < t.vars) {
                t.pivot(i, pc);
                ++i;
            } else {
                // redundant row: remove it
                const std::size_t last = t.rows - 1;
                if (i != last) {
                    for (std::size_t j = 0; j <= t.vars; ++j) t.at(i, j) = t.at(last, j);
                    t.basis[i] = t.basis[last];
                }
                t.a.resize(last * (t.vars + 1));
                t.basis.resize(last);
                t.rows = last;
            }
        }
    }

    // Phase 2: the real objective over structural + surplus columns.
    {
        std::vector<double> cost(t.vars, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            cost[j] = lp.maximize ? -lp.objective[j] : lp.objective[j];
        if (run_phase(t, cost, art0, opt, pivots) == PhaseOutcome::Unbounded)
            return SimplexSolution{SimplexSolution::Kind::Unbounded, 0.0, {}};
    }

    std::vector<double> point(n, 0.0);
    for (std::size_t i = 0; i < t.rows; ++i)
        if (t.basis[i] >= 0 && t.basis[i] < static_cast<int>(n))
            point[t.basis[i]] = t.rhs(i);
    double value = 0.0;
    for (std::size_t j = 0; j < n; ++j) value += lp.objective[j] * point[j];
    return SimplexSolution{SimplexSolution::Kind::Optimal, value, std::move(point)};
}

} // namespace relq
