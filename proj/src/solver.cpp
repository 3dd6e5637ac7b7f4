#include "relq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "relq/errors.hpp"

namespace relq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<double> mask_coeff(const AtomMask& m) {
    std::vector<double> c(m.bit_count(), 0.0);
    for (std::size_t a = 0; a < m.bit_count(); ++a)
        if (m.test(a)) c[a] = 1.0;
    return c;
}

Distribution make_witness(std::vector<double> p) {
    for (double& v : p) {
        if (v < 0.0) {
            if (v < -1e-7)
                throw NumericError("solution point has a negative entry " + std::to_string(v));
            v = 0.0;
        }
    }
    return Distribution(std::move(p));
}

void require_linear_only(const ConstraintSet& cs, const char* who) {
    if (!cs.bilinear.empty())
        throw DomainError(std::string(who) + " requires a purely linear constraint set");
}

LinearProgramSpec base_lp(const ConstraintSet& cs) {
    LinearProgramSpec lp;
    lp.num_vars = cs.dimension;
    lp.rows = cs.linear;
    lp.rows.push_back(
        LinearConstraint{std::vector<double>(cs.dimension, 1.0), Rel::Eq, 1.0, "simplex"});
    lp.objective.assign(cs.dimension, 0.0);
    return lp;
}

SimplexOptions options_of(const SolveConfig& cfg) {
    SimplexOptions opt;
    opt.max_pivots = cfg.max_pivots;
    return opt;
}

} // namespace

std::string to_string(IntervalStatus s) {
    switch (s) {
        case IntervalStatus::Exact: return "EXACT";
        case IntervalStatus::InnerApprox: return "INNER_APPROX";
        case IntervalStatus::Infeasible: return "INFEASIBLE";
        case IntervalStatus::UndefinedQuery: return "UNDEFINED_QUERY";
    }
    return "?";
}

Interval bounds_linear(const std::vector<double>& query, const ConstraintSet& cs,
                       const SolveConfig& cfg) {
    require_linear_only(cs, "bounds_linear");
    if (query.size() != cs.dimension)
        throw DimensionError("query form has wrong dimension");
    LinearProgramSpec lp = base_lp(cs);
    lp.objective = query;
    const SimplexOptions opt = options_of(cfg);

    lp.maximize = false;
    const SimplexSolution mn = simplex_solve(lp, opt);
    if (mn.kind == SimplexSolution::Kind::Infeasible)
        return Interval{kNaN, kNaN, IntervalStatus::Infeasible, std::nullopt, std::nullopt};
    if (mn.kind == SimplexSolution::Kind::Unbounded)
        throw NumericError("unbounded LP on the probability simplex");

    lp.maximize = true;
    const SimplexSolution mx = simplex_solve(lp, opt);
    if (mx.kind != SimplexSolution::Kind::Optimal)
        throw NumericError("max solve failed after feasible min solve");

    Interval iv;
    iv.status = IntervalStatus::Exact;
    iv.lo = std::min(mn.value, mx.value);
    iv.hi = std::max(mn.value, mx.value);
    iv.witness_lo = make_witness(mn.value <= mx.value ? mn.point : mx.point);
    iv.witness_hi = make_witness(mn.value <= mx.value ? mx.point : mn.point);
    return iv;
}

Interval bounds_fractional(const std::vector<double>& num, const std::vector<double>& den,
                           const ConstraintSet& cs, const SolveConfig& cfg) {
    require_linear_only(cs, "bounds_fractional");
    if (num.size() != cs.dimension || den.size() != cs.dimension)
        throw DimensionError("query form has wrong dimension");
    const SimplexOptions opt = options_of(cfg);

    // Does the denominator clear the guard anywhere on the feasible set?
    {
        LinearProgramSpec lp = base_lp(cs);
        lp.objective = den;
        lp.maximize = true;
        const SimplexSolution top = simplex_solve(lp, opt);
        if (top.kind == SimplexSolution::Kind::Infeasible)
            return Interval{kNaN, kNaN, IntervalStatus::Infeasible, std::nullopt, std::nullopt};
        if (top.kind != SimplexSolution::Kind::Optimal)
            throw NumericError("denominator probe failed");
        if (top.value < cfg.eps_cond)
            return Interval{kNaN, kNaN, IntervalStatus::UndefinedQuery, std::nullopt,
                            std::nullopt};
    }

    // Charnes-Cooper: u = t p, t >= 0; den.u = 1 normalizes the ratio.
    const std::size_t m = cs.dimension;
    LinearProgramSpec lp;
    lp.num_vars = m + 1;
    for (const auto& r : cs.linear) {
        std::vector<double> c(m + 1, 0.0);
        std::copy(r.coeff.begin(), r.coeff.end(), c.begin());
        c[m] = -r.rhs;
        lp.rows.push_back(LinearConstraint{std::move(c), r.rel, 0.0, r.origin});
    }
    {
        std::vector<double> c(m + 1, 1.0); // sum u - t = 0
        c[m] = -1.0;
        lp.rows.push_back(LinearConstraint{std::move(c), Rel::Eq, 0.0, "simplex"});
    }
    {
        std::vector<double> c(m + 1, 0.0); // den.u = 1
        std::copy(den.begin(), den.end(), c.begin());
        lp.rows.push_back(LinearConstraint{std::move(c), Rel::Eq, 1.0, "normalization"});
    }
    {
        std::vector<double> c(m + 1, 0.0); // den.u >= eps_cond * t
        std::copy(den.begin(), den.end(), c.begin());
        c[m] = -cfg.eps_cond;
        lp.rows.push_back(LinearConstraint{std::move(c), Rel::Ge, 0.0, "guard"});
    }
    lp.objective.assign(m + 1, 0.0);
    std::copy(num.begin(), num.end(), lp.objective.begin());

    auto solve_side = [&](bool maximize) -> SimplexSolution {
        lp.maximize = maximize;
        const SimplexSolution s = simplex_solve(lp, opt);
        if (s.kind != SimplexSolution::Kind::Optimal)
            throw NumericError("fractional bound solve failed unexpectedly");
        return s;
    };
    const SimplexSolution mn = solve_side(false);
    const SimplexSolution mx = solve_side(true);

    auto recover = [&](const SimplexSolution& s) -> Distribution {
        const double t = s.point[m];
        if (!(t > 1e-300))
            throw NumericError("degenerate homogenization factor in fractional solve");
        std::vector<double> p(m);
        for (std::size_t i = 0; i < m; ++i) p[i] = s.point[i] / t;
        return make_witness(std::move(p));
    };

    Interval iv;
    iv.status = IntervalStatus::Exact;
    iv.lo = std::min(mn.value, mx.value);
    iv.hi = std::max(mn.value, mx.value);
    iv.witness_lo = recover(mn.value <= mx.value ? mn : mx);
    iv.witness_hi = recover(mn.value <= mx.value ? mx : mn);
    return iv;
}

// ---------------------------------------------------------------------------
// Query forms

QueryForm query_form(const Query& q, const EventTable& table) {
    const AtomMask ma = atoms_of(q.a, table);
    switch (q.family) {
        case CoeffFamily::P:
            if (!q.b) return LinearForm{mask_coeff(ma)};
            else {
                const AtomMask mb = atoms_of(*q.b, table);
                return RatioForm{mask_coeff(ma & mb), mask_coeff(mb)};
            }
        case CoeffFamily::O:
            if (!q.b) return RatioForm{mask_coeff(ma), mask_coeff(~ma)};
            else {
                const AtomMask mb = atoms_of(*q.b, table);
                return RatioForm{mask_coeff(ma & mb), mask_coeff(~ma & mb)};
            }
        case CoeffFamily::CondP: {
            const AtomMask mb = atoms_of(*q.b, table);
            return RatioForm{mask_coeff(ma & mb), mask_coeff(mb)};
        }
        case CoeffFamily::CondO: {
            const AtomMask mb = atoms_of(*q.b, table);
            return RatioForm{mask_coeff(ma & mb), mask_coeff(~ma & mb)};
        }
        case CoeffFamily::FOdds: {
            const AtomMask mb = atoms_of(*q.b, table);
            return RatioForm{mask_coeff(ma & ~mb), mask_coeff(~ma & mb)};
        }
        case CoeffFamily::FProb: {
            const AtomMask mb = atoms_of(*q.b, table);
            return RatioForm{mask_coeff(ma), mask_coeff(mb)};
        }
        case CoeffFamily::QOdds: {
            const AtomMask mb = atoms_of(*q.b, table);
            return ProductRatioForm{mask_coeff(ma & mb), mask_coeff(~ma & ~mb),
                                    mask_coeff(ma & ~mb), mask_coeff(~ma & mb)};
        }
        case CoeffFamily::QProb: {
            const AtomMask mb = atoms_of(*q.b, table);
            return ProductRatioForm{mask_coeff(ma & mb), mask_coeff(~mb),
                                    mask_coeff(ma & ~mb), mask_coeff(mb)};
        }
    }
    throw Error("unreachable: bad query family");
}

double eval_query_form(const QueryForm& f, const std::vector<double>& p) {
    if (const auto* lin = std::get_if<LinearForm>(&f)) return dot(lin->c, p);
    if (const auto* rat = std::get_if<RatioForm>(&f)) return dot(rat->num, p) / dot(rat->den, p);
    const auto& pr = std::get<ProductRatioForm>(f);
    return (dot(pr.n1, p) * dot(pr.n2, p)) / (dot(pr.d1, p) * dot(pr.d2, p));
}

// ---------------------------------------------------------------------------
// Multi-start penalty search for bilinear systems

namespace {

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < n; ++j) {
        cum += u[j];
        const double t = (cum - 1.0) / double(j + 1);
        if (u[j] - t > 0.0) {
            rho = j + 1;
            theta = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(x - theta, 0.0);
}

struct SearchProblem {
    const ConstraintSet* cs = nullptr;
    const QueryForm* query = nullptr; // null for pure feasibility search
    double sense = +1.0;              // +1 minimize, -1 maximize
    double eps_cond = 1e-9;

    double value_floor() const { return 0.5 * eps_cond; }

    // Objective term guiding the extremization; ratios are driven in log space.
    double value_term(const std::vector<double>& p) const {
        if (!query) return 0.0;
        if (const auto* lin = std::get_if<LinearForm>(query)) return sense * dot(lin->c, p);
        const double fl = value_floor();
        if (const auto* rat = std::get_if<RatioForm>(query)) {
            const double n = std::max(dot(rat->num, p), fl);
            const double d = std::max(dot(rat->den, p), fl);
            return sense * (std::log(n) - std::log(d));
        }
        const auto& pr = std::get<ProductRatioForm>(*query);
        const double a = std::max(dot(pr.n1, p), fl);
        const double b = std::max(dot(pr.n2, p), fl);
        const double c = std::max(dot(pr.d1, p), fl);
        const double d = std::max(dot(pr.d2, p), fl);
        return sense * (std::log(a) + std::log(b) - std::log(c) - std::log(d));
    }

    void add_value_grad(const std::vector<double>& p, std::vector<double>& g) const {
        if (!query) return;
        if (const auto* lin = std::get_if<LinearForm>(query)) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sense * lin->c[i];
            return;
        }
        const double fl = value_floor();
        auto add_log_grad = [&](const std::vector<double>& form, double s) {
            const double v = dot(form, p);
            if (v <= fl) return; // flat below the floor
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * form[i] / v;
        };
        if (const auto* rat = std::get_if<RatioForm>(query)) {
            add_log_grad(rat->num, sense);
            add_log_grad(rat->den, -sense);
            return;
        }
        const auto& pr = std::get<ProductRatioForm>(*query);
        add_log_grad(pr.n1, sense);
        add_log_grad(pr.n2, sense);
        add_log_grad(pr.d1, -sense);
        add_log_grad(pr.d2, -sense);
    }

    double violation_sq(const std::vector<double>& p) const {
        double s = 0.0;
        for (const auto& r : cs->linear) {
            const double v = r.residual(p);
            const double viol = (r.rel == Rel::Eq) ? v : std::min(v, 0.0);
            s += viol * viol;
        }
        for (const auto& r : cs->bilinear) {
            const double v = r.residual(p);
            const double viol = (r.rel == Rel::Eq) ? v : std::min(v, 0.0);
            s += viol * viol;
        }
        return s;
    }

    void add_violation_grad(const std::vector<double>& p, double rho,
                            std::vector<double>& g) const {
        for (const auto& r : cs->linear) {
            const double v = r.residual(p);
            const double act = (r.rel == Rel::Eq) ? v : std::min(v, 0.0);
            if (act == 0.0) continue;
            const double f = 2.0 * rho * act;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * r.coeff[i];
        }
        for (const auto& r : cs->bilinear) {
            const double v = r.residual(p);
            const double act = (r.rel == Rel::Eq) ? v : std::min(v, 0.0);
            if (act == 0.0) continue;
            const double f = 2.0 * rho * act;
            const double a1 = dot(r.l1, p), a2 = dot(r.l2, p);
            const double a3 = dot(r.l3, p), a4 = dot(r.l4, p);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double dr = a2 * r.l1[i] + a1 * r.l2[i] -
                                  r.scale * (a4 * r.l3[i] + a3 * r.l4[i]);
                g[i] += f * dr;
            }
        }
    }

    double phi(const std::vector<double>& p, double rho) const {
        return value_term(p) + rho * violation_sq(p);
    }

    std::vector<double> grad_phi(const std::vector<double>& p, double rho) const {
        std::vector<double> g(p.size(), 0.0);
        add_value_grad(p, g);
        add_violation_grad(p, rho, g);
        return g;
    }
};

// Projected gradient descent with backtracking, one penalty round.
void descend(const SearchProblem& prob, std::vector<double>& p, double rho, int iters) {
    double alpha = 0.1;
    double fp = prob.phi(p, rho);
    for (int it = 0; it < iters; ++it) {
        const std::vector<double> g = prob.grad_phi(p, rho);
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt) {
            std::vector<double> trial(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) trial[i] = p[i] - alpha * g[i];
            project_simplex(trial);
            const double ft = prob.phi(trial, rho);
            if (ft < fp - 1e-15) {
                double delta = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i)
                    delta = std::max(delta, std::abs(trial[i] - p[i]));
                p = std::move(trial);
                fp = ft;
                alpha *= 1.25;
                moved = true;
                if (delta < 1e-13) return;
                break;
            }
            alpha *= 0.5;
            if (alpha < 1e-18) return;
        }
        if (!moved) return;
    }
}

// Gauss-Newton restoration onto the constraint manifold (equalities plus the
// violated inequalities plus the simplex sum), with positivity clamping.
bool repair(const ConstraintSet& cs, std::vector<double>& p, int max_iters, double target) {
    const std::size_t m = p.size();
    for (int it = 0; it < max_iters; ++it) {
        std::vector<std::vector<double>> J;
        std::vector<double> R;
        auto push_row = [&](std::vector<double> row, double res) {
            J.push_back(std::move(row));
            R.push_back(res);
        };
        for (const auto& r : cs.linear) {
            const double v = r.residual(p);
            if (r.rel == Rel::Eq) {
                push_row(r.coeff, v);
            } else if (v < 0.0) {
                push_row(r.coeff, v);
            }
        }
        for (const auto& r : cs.bilinear) {
            const double v = r.residual(p);
            if (r.rel == Rel::Ge && v >= 0.0) continue;
            const double a1 = dot(r.l1, p), a2 = dot(r.l2, p);
            const double a3 = dot(r.l3, p), a4 = dot(r.l4, p);
            std::vector<double> row(m);
            for (std::size_t i = 0; i < m; ++i)
                row[i] = a2 * r.l1[i] + a1 * r.l2[i] - r.scale * (a4 * r.l3[i] + a3 * r.l4[i]);
            push_row(std::move(row), v);
        }
        {
            double s = -1.0;
            for (double v : p) s += v;
            push_row(std::vector<double>(m, 1.0), s);
        }

        double worst = 0.0;
        for (double r : R) worst = std::max(worst, std::abs(r));
        if (worst <= target) return true;

        // minimum-norm step: delta = J^T (J J^T + ridge)^-1 R
        const std::size_t k = J.size();
        std::vector<double> G(k * k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i; j < k; ++j) {
                const double v = dot(J[i], J[j]);
                G[i * k + j] = v;
                G[j * k + i] = v;
            }
        double ridge = 0.0;
        for (std::size_t i = 0; i < k; ++i) ridge = std::max(ridge, G[i * k + i]);
        ridge = std::max(ridge, 1.0) * 1e-14;
        for (std::size_t i = 0; i < k; ++i) G[i * k + i] += ridge;

        // Gaussian elimination with partial pivoting on G lambda = R
        std::vector<double> lam = R;
        {
            std::vector<std::size_t> perm(k);
            for (std::size_t i = 0; i < k; ++i) perm[i] = i;
            for (std::size_t col = 0; col < k; ++col) {
                std::size_t piv = col;
                for (std::size_t i = col + 1; i < k; ++i)
                    if (std::abs(G[perm[i] * k + col]) > std::abs(G[perm[piv] * k + col]))
                        piv = i;
                std::swap(perm[col], perm[piv]);
                const double pv = G[perm[col] * k + col];
                if (std::abs(pv) < 1e-300) return false;
                for (std::size_t i = col + 1; i < k; ++i) {
                    const double f = G[perm[i] * k + col] / pv;
                    if (f == 0.0) continue;
                    for (std::size_t j = col; j < k; ++j)
                        G[perm[i] * k + j] -= f * G[perm[col] * k + j];
                    lam[perm[i]] -= f * lam[perm[col]];
                }
            }
            std::vector<double> x(k);
            for (std::size_t ii = k; ii-- > 0;) {
                double s = lam[perm[ii]];
                for (std::size_t j = ii + 1; j < k; ++j) s -= G[perm[ii] * k + j] * x[j];
                x[ii] = s / G[perm[ii] * k + ii];
            }
            lam = std::move(x);
        }
        for (std::size_t i = 0; i < m; ++i) {
            double d = 0.0;
            for (std::size_t r = 0; r < k; ++r) d += J[r][i] * lam[r];
            p[i] -= d;
            if (p[i] < 0.0) p[i] = 0.0;
        }
    }
    return false;
}

struct Candidate {
    double value;
    std::vector<double> point;
};

struct SearchResult {
    std::optional<Candidate> best_lo, best_hi;
    bool any() const { return best_lo.has_value(); }
};

bool query_guards_ok(const QueryForm* query, const std::vector<double>& p, double eps) {
    if (!query) return true;
    if (std::holds_alternative<LinearForm>(*query)) return true;
    if (const auto* rat = std::get_if<RatioForm>(query)) return dot(rat->den, p) >= eps;
    const auto& pr = std::get<ProductRatioForm>(*query);
    return dot(pr.n1, p) >= eps && dot(pr.n2, p) >= eps && dot(pr.d1, p) >= eps &&
           dot(pr.d2, p) >= eps;
}

bool all_satisfied(const ConstraintSet& cs, const std::vector<double>& p, double tol) {
    for (const auto& r : cs.linear)
        if (!r.satisfied(p, tol)) return false;
    for (const auto& r : cs.bilinear)
        if (!r.satisfied(p, tol)) return false;
    double s = -1.0;
    for (double v : p) s += v;
    return std::abs(s) <= tol;
}

// Shared engine behind bounds_nonconvex and the bilinear feasibility check.
SearchResult penalty_search(const QueryForm* query, const ConstraintSet& cs,
                            const SolveConfig& cfg, bool stop_at_first) {
    const SimplexOptions opt = options_of(cfg);

    // Vertex pool from the linear relaxation, random objectives.
    LinearProgramSpec lp = base_lp(cs);
    std::vector<std::vector<double>> pool;
    const int pool_size = std::clamp(cfg.starts / 2, 8, 64);
    for (int k = 0; k < pool_size; ++k) {
        std::mt19937_64 rng(mix64(cfg.seed ^ mix64(0xA11CEull + k)));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& c : lp.objective) c = normal(rng);
        lp.maximize = false;
        const SimplexSolution s = simplex_solve(lp, opt);
        if (s.kind == SimplexSolution::Kind::Infeasible)
            return SearchResult{}; // caller already knows the relaxation status
        if (s.kind == SimplexSolution::Kind::Optimal) pool.push_back(s.point);
    }
    if (pool.empty()) return SearchResult{};

    SearchProblem prob;
    prob.cs = &cs;
    prob.query = query;
    prob.eps_cond = cfg.eps_cond;

    SearchResult out;
    auto consider = [&](const std::vector<double>& p) {
        if (!all_satisfied(cs, p, cfg.feas_tol)) return;
        if (!query_guards_ok(query, p, cfg.eps_cond)) return;
        const double v = query ? eval_query_form(*query, p) : 0.0;
        if (!std::isfinite(v)) return;
        if (!out.best_lo || v < out.best_lo->value) out.best_lo = Candidate{v, p};
        if (!out.best_hi || v > out.best_hi->value) out.best_hi = Candidate{v, p};
    };

    const int senses = (query && !stop_at_first) ? 2 : 1;
    for (int s = 0; s < cfg.starts; ++s) {
        std::mt19937_64 rng(mix64(cfg.seed ^ mix64(0x5742ull + s)));
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        std::exponential_distribution<double> expo(1.0);

        std::vector<double> p0(cs.dimension, 0.0);
        {
            double wsum = 0.0;
            const int blend = 4;
            for (int b = 0; b < blend; ++b) {
                const double w = expo(rng) + 1e-12;
                const auto& v = pool[pick(rng)];
                for (std::size_t i = 0; i < p0.size(); ++i) p0[i] += w * v[i];
                wsum += w;
            }
            for (double& x : p0) x /= wsum;
        }

        for (int sense = 0; sense < senses; ++sense) {
            prob.sense = (sense == 0) ? +1.0 : -1.0;
            std::vector<double> p = p0;
            double rho = cfg.rho0;
            for (int round = 0; round < cfg.penalty_rounds; ++round, rho *= 10.0)
                descend(prob, p, rho, cfg.iters_per_round);
            repair(cs, p, 80, 1e-13);
            consider(p);
            if (stop_at_first && out.any()) return out;
        }
    }
    return out;
}

} // namespace

Interval bounds_nonconvex(const QueryForm& query, const ConstraintSet& cs,
                          const SolveConfig& cfg) {
    // Infeasibility of the linear relaxation is definitive.
    {
        LinearProgramSpec lp = base_lp(cs);
        const SimplexSolution s = simplex_solve(lp, options_of(cfg));
        if (s.kind == SimplexSolution::Kind::Infeasible)
            return Interval{kNaN, kNaN, IntervalStatus::Infeasible, std::nullopt, std::nullopt};
    }
    const SearchResult res = penalty_search(&query, cs, cfg, false);
    if (!res.any())
        throw UnknownFeasibilityError("no feasible point found after " +
                                      std::to_string(cfg.starts) +
                                      " starts; the bilinear system is undecided");
    Interval iv;
    iv.status = IntervalStatus::InnerApprox;
    iv.lo = res.best_lo->value;
    iv.hi = res.best_hi->value;
    iv.witness_lo = make_witness(res.best_lo->point);
    iv.witness_hi = make_witness(res.best_hi->point);
    return iv;
}

// ---------------------------------------------------------------------------
// answer_query

namespace {

// Maximum of a linear form over the linear part of the system (a relaxation
// when bilinear constraints are present).
std::optional<double> relaxed_max(const std::vector<double>& form, const ConstraintSet& cs,
                                  const SolveConfig& cfg) {
    ConstraintSet lin;
    lin.dimension = cs.dimension;
    lin.linear = cs.linear;
    LinearProgramSpec lp = base_lp(lin);
    lp.objective = form;
    lp.maximize = true;
    const SimplexSolution s = simplex_solve(lp, options_of(cfg));
    if (s.kind == SimplexSolution::Kind::Infeasible) return std::nullopt;
    if (s.kind != SimplexSolution::Kind::Optimal)
        throw NumericError("relaxation probe failed");
    return s.value;
}

bool is_singleton(const Interval& iv) {
    return iv.status == IntervalStatus::Exact &&
           iv.hi - iv.lo <= 1e-9 * std::max(1.0, std::abs(iv.hi));
}

// Exact certificate for a Quetelet query under purely linear constraints:
// the query factors into two linear-fractional forms; when both factor
// intervals are pinned, so is the query.
std::optional<Interval> quetelet_certificate(const Query& q, const ConstraintSet& cs,
                                             const EventTable& table, const SolveConfig& cfg) {
    const AtomMask ma = atoms_of(q.a, table);
    const AtomMask mb = atoms_of(*q.b, table);
    Interval f1, f2;
    bool quotient = false;
    if (q.family == CoeffFamily::QOdds) {
        // Q(a|b) = (x/z) * (w/y)
        f1 = bounds_fractional(mask_coeff(ma & mb), mask_coeff(~ma & mb), cs, cfg);
        if (f1.status == IntervalStatus::Infeasible) return f1;
        f2 = bounds_fractional(mask_coeff(~ma & ~mb), mask_coeff(ma & ~mb), cs, cfg);
    } else {
        // Q(a:b) = P(a|b) / P(a|-b)
        quotient = true;
        f1 = bounds_fractional(mask_coeff(ma & mb), mask_coeff(mb), cs, cfg);
        if (f1.status == IntervalStatus::Infeasible) return f1;
        f2 = bounds_fractional(mask_coeff(ma & ~mb), mask_coeff(~mb), cs, cfg);
    }
    if (f2.status == IntervalStatus::Infeasible) return f2;
    if (f1.status != IntervalStatus::Exact || f2.status != IntervalStatus::Exact)
        return std::nullopt;
    if (!is_singleton(f1) || !is_singleton(f2)) return std::nullopt;
    if (quotient && f2.lo <= cfg.eps_cond) return std::nullopt;

    const double v = quotient ? f1.lo / f2.lo : f1.lo * f2.lo;
    Interval iv;
    iv.status = IntervalStatus::Exact;
    iv.lo = iv.hi = v;
    iv.witness_lo = f1.witness_lo;
    iv.witness_hi = f1.witness_hi;
    return iv;
}

Interval convert_interval(Interval iv, RangeType from, RangeType to) {
    if (from == to || iv.status == IntervalStatus::Infeasible ||
        iv.status == IntervalStatus::UndefinedQuery)
        return iv;
    // conversions are monotone increasing, so endpoints map to endpoints
    const ExtReal lo = std::isinf(iv.lo) ? ExtReal::infinity() : ExtReal::of(iv.lo);
    const ExtReal hi = std::isinf(iv.hi) ? ExtReal::infinity() : ExtReal::of(iv.hi);
    iv.lo = convert(lo, from, to).value();
    iv.hi = convert(hi, from, to).value();
    return iv;
}

Interval solve_one(const Query& q, const ConstraintSet& cs, const EventTable& table,
                   const SolveConfig& cfg) {
    const QueryForm form = query_form(q, table);
    const bool q_family = (q.family == CoeffFamily::QOdds || q.family == CoeffFamily::QProb);
    const bool has_bilinear = !cs.bilinear.empty();
    Interval iv;

    if (!has_bilinear && !q_family) {
        if (const auto* lin = std::get_if<LinearForm>(&form)) {
            iv = bounds_linear(lin->c, cs, cfg);
        } else {
            const auto& rat = std::get<RatioForm>(form);
            iv = bounds_fractional(rat.num, rat.den, cs, cfg);
        }
    } else {
        // Denominator probes on the linear relaxation: if a denominator factor
        // cannot clear the guard there, the query is undefined everywhere.
        std::vector<const std::vector<double>*> dens;
        if (const auto* rat = std::get_if<RatioForm>(&form)) {
            dens.push_back(&rat->den);
        } else if (const auto* pr = std::get_if<ProductRatioForm>(&form)) {
            dens.push_back(&pr->d1);
            dens.push_back(&pr->d2);
        }
        for (const auto* d : dens) {
            const auto top = relaxed_max(*d, cs, cfg);
            if (!top)
                return Interval{kNaN, kNaN, IntervalStatus::Infeasible, std::nullopt,
                                std::nullopt};
            if (*top < cfg.eps_cond)
                return Interval{kNaN, kNaN, IntervalStatus::UndefinedQuery, std::nullopt,
                                std::nullopt};
        }
        if (q_family && !has_bilinear) {
            if (auto cert = quetelet_certificate(q, cs, table, cfg)) return *cert;
        }
        iv = bounds_nonconvex(form, cs, cfg);
    }
    return convert_interval(iv, main_range(q.family), q.range);
}

} // namespace

std::vector<QueryResult> answer_query(const Program& program, const SolveConfig& cfg) {
    const ConstraintSet cs =
        normalize_all(program.declarations, program.events, cfg.eps_cond);
    std::vector<QueryResult> out;
    out.reserve(program.queries.size());
    for (const auto& q : program.queries) {
        QueryResult r;
        r.query = q;
        try {
            r.interval = solve_one(q, cs, program.events, cfg);
        } catch (const Error& e) {
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

FeasibilityReport check_feasible(const Program& program, const SolveConfig& cfg) {
    const ConstraintSet cs =
        normalize_all(program.declarations, program.events, cfg.eps_cond);
    LinearProgramSpec lp = base_lp(cs);
    const SimplexSolution s = simplex_solve(lp, options_of(cfg));
    if (s.kind == SimplexSolution::Kind::Infeasible) {
        FeasibilityReport rep;
        rep.verdict = Feasibility::Infeasible;
        const auto core = infeasible_core(program, cfg);
        if (!core.empty()) {
            rep.detail = "infeasible core:";
            for (const auto& c : core) rep.detail += "\n  " + c;
        }
        return rep;
    }
    if (cs.bilinear.empty())
        return FeasibilityReport{Feasibility::Feasible, make_witness(s.point), ""};

    const SearchResult res = penalty_search(nullptr, cs, cfg, true);
    if (res.any())
        return FeasibilityReport{Feasibility::Feasible, make_witness(res.best_lo->point), ""};
    return FeasibilityReport{Feasibility::Unknown, std::nullopt,
                             "no feasible point found after " + std::to_string(cfg.starts) +
                                 " starts; the bilinear system is undecided"};
}

std::vector<std::string> infeasible_core(const Program& program, const SolveConfig& cfg) {
    auto feasible = [&](const std::vector<Declaration>& decls) {
        ConstraintSet cs = normalize_all(decls, program.events, cfg.eps_cond);
        cs.bilinear.clear(); // core detection works on the linear relaxation
        LinearProgramSpec lp = base_lp(cs);
        return simplex_solve(lp, options_of(cfg)).kind == SimplexSolution::Kind::Optimal;
    };
    std::vector<Declaration> decls = program.declarations;
    if (feasible(decls)) return {};
    // deletion filter: drop every declaration not needed for infeasibility
    for (std::size_t i = decls.size(); i-- > 0;) {
        std::vector<Declaration> trial = decls;
        trial.erase(trial.begin() + static_cast<long>(i));
        if (!feasible(trial)) decls = std::move(trial);
    }
    std::vector<std::string> labels;
    labels.reserve(decls.size());
    for (const auto& d : decls) labels.push_back(label(d));
    return labels;
}

} // namespace relq
