#include "relq/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "relq/errors.hpp"

namespace relq {

namespace {

constexpr std::size_t kBatch = 4096;
constexpr int kProjectionCap = 500;

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double mask_sum(const AtomMask& m, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a)
        if (m.test(a)) s += p[a];
    return s;
}

void project_simplex(std::vector<double>& v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - 1.0) / double(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    for (double& x : v) x = std::max(x - theta, 0.0);
}

// Value-space check of one coefficient assertion, compiled to block masks.
struct CompiledAssert {
    CoeffFamily family;
    RangeType declared;
    double lo, hi;
    bool interval;
    AtomMask x, y, z, w; // blocks of (a, b); for P/O only x (= mask of a) is used

    // main-range value at p; undefined/infinite handled by the caller
    ExtReal eval(const std::vector<double>& p) const {
        const double px = mask_sum(x, p);
        switch (family) {
            case CoeffFamily::P: return ExtReal::of(px);
            case CoeffFamily::O: return ExtReal::ratio(px, 1.0 - px);
            default: break;
        }
        const double py = mask_sum(y, p);
        const double pz = mask_sum(z, p);
        const double pw = mask_sum(w, p);
        switch (family) {
            case CoeffFamily::CondP: return ExtReal::ratio(px, px + pz);
            case CoeffFamily::CondO: return ExtReal::ratio(px, pz);
            case CoeffFamily::QOdds: return ExtReal::ratio(px * pw, py * pz);
            case CoeffFamily::QProb: return ExtReal::ratio(px * (py + pw), py * (px + pz));
            case CoeffFamily::FOdds: return ExtReal::ratio(py, pz);
            case CoeffFamily::FProb:
                return px > 0.0 ? ExtReal::ratio(px + py, px + pz) : ExtReal::undef();
            default: return ExtReal::undef();
        }
    }

    bool ok(const std::vector<double>& p, double tol) const {
        const ExtReal main = eval(p);
        if (main.is_undef()) return false;
        const ExtReal v = convert(main, main_range(family), declared);
        if (v.is_inf()) return interval && std::isinf(hi);
        const double scale = std::max({1.0, std::abs(lo), std::isinf(hi) ? 1.0 : std::abs(hi)});
        return v.value() >= lo - tol * scale &&
               (std::isinf(hi) || v.value() <= hi + tol * scale);
    }
};

struct CompiledDefine {
    AtomMask disagree;
    bool ok(const std::vector<double>& p, double tol) const {
        return mask_sum(disagree, p) <= tol;
    }
};

struct CompiledExch {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    bool ok(const std::vector<double>& p, double tol) const {
        for (const auto& [a, b] : pairs)
            if (std::abs(p[a] - p[b]) > tol) return false;
        return true;
    }
};

// Quadratic residual of a bilinear equality along a line p + t d.
struct SteerQuad {
    const BilinearConstraint* c;
    double a, b, r0;

    static double dotv(const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
        return s;
    }

    SteerQuad(const BilinearConstraint& bc, const std::vector<double>& p,
              const std::vector<double>& d)
        : c(&bc) {
        const double l10 = dotv(bc.l1, p), l1d = dotv(bc.l1, d);
        const double l20 = dotv(bc.l2, p), l2d = dotv(bc.l2, d);
        const double l30 = dotv(bc.l3, p), l3d = dotv(bc.l3, d);
        const double l40 = dotv(bc.l4, p), l4d = dotv(bc.l4, d);
        a = l1d * l2d - bc.scale * l3d * l4d;
        b = l10 * l2d + l1d * l20 - bc.scale * (l30 * l4d + l3d * l40);
        r0 = l10 * l20 - bc.scale * l30 * l40;
    }
};

struct Engine {
    const Program& prog;
    OracleConfig cfg;
    std::size_t m;

    std::vector<CompiledAssert> asserts;
    std::vector<CompiledDefine> defines;
    std::vector<CompiledExch> exchs;
    std::vector<CompiledAssert> queries; // reuse the evaluator, bounds ignored

    // linear equalities used for steering projections
    std::vector<std::vector<double>> aeq;
    std::vector<double> beq;
    std::vector<double> projector; // m x m: I - A^T (A A^T)^-1 A applied as P p + v0
    std::vector<double> offset;    // v0
    std::vector<BilinearConstraint> bil_eq;
    std::vector<std::vector<double>> nullbasis; // orthonormal basis of ker(aeq + sum row)

    Engine(const Program& program, const OracleConfig& c) : prog(program), cfg(c) {
        if (prog.events.size() > 4)
            throw DomainError("oracle supports at most 4 events, got " +
                              std::to_string(prog.events.size()));
        m = prog.events.atom_count();
        compile();
        build_projector();
        build_nullbasis();
    }

    CompiledAssert compile_coeff(CoeffFamily family, const BoolExpr& a,
                                 const std::optional<BoolExpr>& b, RangeType declared,
                                 double lo, double hi, bool interval) const {
        const AtomMask ma = atoms_of(a, prog.events);
        CompiledAssert ca{family, declared, lo, hi, interval,
                          ma, AtomMask(m), AtomMask(m), AtomMask(m)};
        if (b) {
            const AtomMask mb = atoms_of(*b, prog.events);
            ca.x = ma & mb;
            ca.y = ma & ~mb;
            ca.z = ~ma & mb;
            ca.w = ~ma & ~mb;
        }
        return ca;
    }

    void compile() {
        const SolveConfig eps; // only eps_cond's default is relevant here
        for (const auto& d : prog.declarations) {
            if (const auto* ca = std::get_if<CoeffAssert>(&d)) {
                asserts.push_back(compile_coeff(ca->family, ca->a, ca->b, ca->range,
                                                ca->lo, ca->hi, ca->is_interval));
            } else if (const auto* bd = std::get_if<BoolDefine>(&d)) {
                defines.push_back(
                    CompiledDefine{atoms_of(BoolExpr::event(bd->event) ^ bd->expr, prog.events)});
            } else {
                const auto& ex = std::get<ExchBlock>(d);
                std::size_t block_bits = 0;
                for (const auto& name : ex.events) {
                    auto idx = prog.events.index_of(name);
                    if (!idx) throw NameError("unknown event '" + name + "'");
                    block_bits |= std::size_t{1} << (prog.events.size() - 1 - *idx);
                }
                CompiledExch ce;
                std::vector<std::pair<std::pair<std::size_t, int>, std::size_t>> reps;
                for (std::size_t a = 0; a < m; ++a) {
                    const std::pair<std::size_t, int> key{a & ~block_bits,
                                                          std::popcount(a & block_bits)};
                    bool found = false;
                    for (const auto& [k, r] : reps)
                        if (k == key) {
                            ce.pairs.emplace_back(r, a);
                            found = true;
                            break;
                        }
                    if (!found) reps.emplace_back(key, a);
                }
                exchs.push_back(std::move(ce));
            }
        }
        for (const auto& q : prog.queries)
            queries.push_back(compile_coeff(q.family, q.a, q.b, q.range, 0, 0, false));

        // steering structures from the normalized constraint view
        const ConstraintSet cs = normalize_all(prog.declarations, prog.events, eps.eps_cond);
        for (const auto& r : cs.linear)
            if (r.rel == Rel::Eq) {
                aeq.push_back(r.coeff);
                beq.push_back(r.rhs);
            }
        for (const auto& r : cs.bilinear)
            if (r.rel == Rel::Eq) bil_eq.push_back(r);
    }

    // Gaussian solve of G x = rhs, G symmetric positive semidefinite + ridge.
    static std::vector<double> solve_sym(std::vector<double> g, std::vector<double> rhs) {
        const std::size_t k = rhs.size();
        double dmax = 0.0;
        for (std::size_t i = 0; i < k; ++i) dmax = std::max(dmax, g[i * k + i]);
        const double ridge = std::max(dmax, 1.0) * 1e-12;
        for (std::size_t i = 0; i < k; ++i) g[i * k + i] += ridge;
        for (std::size_t col = 0; col < k; ++col) {
            std::size_t piv = col;
            for (std::size_t i = col + 1; i < k; ++i)
                if (std::abs(g[i * k + col]) > std::abs(g[piv * k + col])) piv = i;
            if (piv != col) {
                for (std::size_t j = 0; j < k; ++j) std::swap(g[col * k + j], g[piv * k + j]);
                std::swap(rhs[col], rhs[piv]);
            }
            const double pv = g[col * k + col];
            for (std::size_t i = col + 1; i < k; ++i) {
                const double f = g[i * k + col] / pv;
                if (f == 0.0) continue;
                for (std::size_t j = col; j < k; ++j) g[i * k + j] -= f * g[col * k + j];
                rhs[i] -= f * rhs[col];
            }
        }
        std::vector<double> x(k);
        for (std::size_t ii = k; ii-- > 0;) {
            double s = rhs[ii];
            for (std::size_t j = ii + 1; j < k; ++j) s -= g[ii * k + j] * x[j];
            x[ii] = s / g[ii * k + ii];
        }
        return x;
    }

    void build_projector() {
        const std::size_t k = aeq.size();
        projector.assign(m * m, 0.0);
        offset.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) projector[i * m + i] = 1.0;
        if (k == 0) return;
        // P = I - A^T G^-1 A,  v0 = A^T G^-1 b,  G = A A^T (+ ridge)
        std::vector<double> gram(k * k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i; j < k; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < m; ++t) s += aeq[i][t] * aeq[j][t];
                gram[i * k + j] = gram[j * k + i] = s;
            }
        // columns of G^-1 A and G^-1 b via k solves
        std::vector<std::vector<double>> ginv_a(k, std::vector<double>(m));
        for (std::size_t t = 0; t < m; ++t) {
            std::vector<double> col(k);
            for (std::size_t i = 0; i < k; ++i) col[i] = aeq[i][t];
            const auto x = solve_sym(gram, col);
            for (std::size_t i = 0; i < k; ++i) ginv_a[i][t] = x[i];
        }
        const auto gb = solve_sym(gram, beq);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c2 = 0; c2 < m; ++c2) {
                double s = 0.0;
                for (std::size_t i = 0; i < k; ++i) s += aeq[i][r] * ginv_a[i][c2];
                projector[r * m + c2] -= s;
            }
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += aeq[i][r] * gb[i];
            offset[r] = s;
        }
    }

    void build_nullbasis() {
        // orthonormal basis of the null space of [aeq; all-ones] by
        // Gram-Schmidt over projected coordinate directions
        std::vector<std::vector<double>> rows = aeq;
        rows.emplace_back(m, 1.0);
        // orthonormalize the row space first
        std::vector<std::vector<double>> rspace;
        for (auto r : rows) {
            for (const auto& q : rspace) {
                double d = 0.0;
                for (std::size_t i = 0; i < m; ++i) d += q[i] * r[i];
                for (std::size_t i = 0; i < m; ++i) r[i] -= d * q[i];
            }
            double nrm = 0.0;
            for (double v : r) nrm += v * v;
            if (nrm > 1e-20) {
                nrm = std::sqrt(nrm);
                for (double& v : r) v /= nrm;
                rspace.push_back(std::move(r));
            }
        }
        for (std::size_t c = 0; c < m; ++c) {
            std::vector<double> v(m, 0.0);
            v[c] = 1.0;
            for (const auto& q : rspace) {
                const double d = q[c];
                for (std::size_t i = 0; i < m; ++i) v[i] -= d * q[i];
            }
            for (const auto& q : nullbasis) {
                double d = 0.0;
                for (std::size_t i = 0; i < m; ++i) d += q[i] * v[i];
                for (std::size_t i = 0; i < m; ++i) v[i] -= d * q[i];
            }
            double nrm = 0.0;
            for (double x : v) nrm += x * x;
            if (nrm > 1e-16) {
                nrm = std::sqrt(nrm);
                for (double& x : v) x /= nrm;
                nullbasis.push_back(std::move(v));
            }
        }
    }

    double eq_residual(const std::vector<double>& p) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < aeq.size(); ++i) {
            double s = -beq[i];
            for (std::size_t t = 0; t < m; ++t) s += aeq[i][t] * p[t];
            worst = std::max(worst, std::abs(s));
        }
        return worst;
    }

    // Alternate between the equality-affine subspace and the simplex.
    void project(std::vector<double>& p) const {
        std::vector<double> next(m);
        for (int it = 0; it < kProjectionCap; ++it) {
            if (!aeq.empty()) {
                for (std::size_t r = 0; r < m; ++r) {
                    double s = offset[r];
                    const double* row = &projector[r * m];
                    for (std::size_t c = 0; c < m; ++c) s += row[c] * p[c];
                    next[r] = s;
                }
                p.swap(next);
            }
            project_simplex(p);
            if (eq_residual(p) <= 1e-12) return;
            if (aeq.empty()) return;
        }
    }

    // Walk along null-space directions to zero out bilinear equalities.
    void bilinear_repair(std::vector<double>& p) const {
        if (bil_eq.empty() || nullbasis.empty()) return;
        for (int pass = 0; pass < 5; ++pass) {
            double worst = 0.0;
            for (const auto& bc : bil_eq) worst = std::max(worst, std::abs(bc.residual(p)));
            if (worst <= 1e-13) return;
            for (const auto& bc : bil_eq) {
                if (std::abs(bc.residual(p)) <= 1e-13) continue;
                // gradient of the residual, projected into the null space
                std::vector<double> g(m, 0.0);
                const double a1 = SteerQuad::dotv(bc.l1, p), a2 = SteerQuad::dotv(bc.l2, p);
                const double a3 = SteerQuad::dotv(bc.l3, p), a4 = SteerQuad::dotv(bc.l4, p);
                for (std::size_t i = 0; i < m; ++i)
                    g[i] = a2 * bc.l1[i] + a1 * bc.l2[i] -
                           bc.scale * (a4 * bc.l3[i] + a3 * bc.l4[i]);
                std::vector<double> d(m, 0.0);
                for (const auto& q : nullbasis) {
                    double c = 0.0;
                    for (std::size_t i = 0; i < m; ++i) c += q[i] * g[i];
                    for (std::size_t i = 0; i < m; ++i) d[i] += c * q[i];
                }
                double dn = 0.0;
                for (double v : d) dn += v * v;
                if (dn < 1e-20) continue;

                const SteerQuad quad(bc, p, d);
                // admissible step range from positivity
                double tlo = -1e30, thi = 1e30;
                for (std::size_t i = 0; i < m; ++i) {
                    if (d[i] > 1e-15) tlo = std::max(tlo, -p[i] / d[i]);
                    else if (d[i] < -1e-15) thi = std::min(thi, -p[i] / d[i]);
                }
                auto try_apply = [&](double t) {
                    if (!(t >= tlo - 1e-15 && t <= thi + 1e-15)) return false;
                    for (std::size_t i = 0; i < m; ++i)
                        p[i] = std::max(p[i] + t * d[i], 0.0);
                    return true;
                };
                bool done = false;
                if (std::abs(quad.a) > 1e-18) {
                    const double disc = quad.b * quad.b - 4.0 * quad.a * quad.r0;
                    if (disc >= 0.0) {
                        const double sq = std::sqrt(disc);
                        const double t1 = (-quad.b + sq) / (2.0 * quad.a);
                        const double t2 = (-quad.b - sq) / (2.0 * quad.a);
                        const double first = std::abs(t1) <= std::abs(t2) ? t1 : t2;
                        const double second = std::abs(t1) <= std::abs(t2) ? t2 : t1;
                        done = try_apply(first) || try_apply(second);
                    }
                } else if (std::abs(quad.b) > 1e-18) {
                    done = try_apply(-quad.r0 / quad.b);
                }
                (void)done;
            }
            project(p); // restore linear equalities after clamping
        }
    }

    bool accepted(const std::vector<double>& p) const {
        for (const auto& a : asserts)
            if (!a.ok(p, cfg.tol)) return false;
        for (const auto& d : defines)
            if (!d.ok(p, cfg.tol)) return false;
        for (const auto& e : exchs)
            if (!e.ok(p, cfg.tol)) return false;
        double s = -1.0;
        for (double v : p) s += v;
        return std::abs(s) <= cfg.tol;
    }

    void pipeline(std::vector<double>& p) const {
        project(p);
        bilinear_repair(p);
    }

    struct Extreme {
        double value;
        std::vector<double> point;
    };

    struct Track {
        std::optional<Extreme> lo, hi;
        void offer(double v, const std::vector<double>& p) {
            if (!std::isfinite(v)) return;
            if (!lo || v < lo->value) lo = Extreme{v, p};
            if (!hi || v > hi->value) hi = Extreme{v, p};
        }
    };

    std::vector<OracleOutcome> run() {
        std::vector<Track> tracks(queries.size());
        long accepted_count = 0;

        std::vector<double> p(m);
        long produced = 0;
        for (std::size_t batch = 0; produced < cfg.samples; ++batch) {
            std::mt19937_64 rng(mix64(cfg.seed ^ mix64(batch + 1)));
            std::exponential_distribution<double> expo(1.0);
            const long todo = std::min<long>(kBatch, cfg.samples - produced);
            for (long s = 0; s < todo; ++s, ++produced) {
                double sum = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    p[i] = expo(rng) + 1e-300;
                    sum += p[i];
                }
                for (double& v : p) v /= sum;
                pipeline(p);
                if (!accepted(p)) continue;
                ++accepted_count;
                for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                    const ExtReal v = queries[qi].eval(p);
                    if (v.is_undef() || v.is_inf()) continue;
                    tracks[qi].offer(v.value(), p);
                }
            }
        }

        // coordinatewise refinement from the extremes
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            refine(tracks[qi], queries[qi], /*minimize=*/true);
            refine(tracks[qi], queries[qi], /*minimize=*/false);
        }

        std::vector<OracleOutcome> out(queries.size());
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            out[qi].accepted = accepted_count;
            auto& tr = tracks[qi];
            if (!tr.lo) continue;
            Interval iv;
            iv.status = IntervalStatus::InnerApprox;
            const RangeType from = main_range(prog.queries[qi].family);
            const RangeType to = prog.queries[qi].range;
            iv.lo = convert(ExtReal::of(tr.lo->value), from, to).value();
            iv.hi = convert(ExtReal::of(tr.hi->value), from, to).value();
            iv.witness_lo = to_dist(tr.lo->point);
            iv.witness_hi = to_dist(tr.hi->point);
            out[qi].interval = iv;
        }
        return out;
    }

    void refine(Track& tr, const CompiledAssert& query, bool minimize) {
        auto& ext = minimize ? tr.lo : tr.hi;
        if (!ext) return;
        std::vector<double> p = ext->point;
        double best = ext->value;
        double delta = 0.05;
        for (int step = 0; step < cfg.refine_steps; ++step) {
            bool improved = false;
            for (std::size_t i = 0; i < m; ++i) {
                for (const double dir : {+1.0, -1.0}) {
                    std::vector<double> q = p;
                    q[i] = std::max(q[i] + dir * delta, 0.0);
                    pipeline(q);
                    if (!accepted(q)) continue;
                    const ExtReal v = query.eval(q);
                    if (v.is_undef() || v.is_inf()) continue;
                    const double val = v.value();
                    if (minimize ? val < best - 1e-15 : val > best + 1e-15) {
                        best = val;
                        p = std::move(q);
                        improved = true;
                    }
                }
            }
            if (!improved) {
                delta *= 0.5;
                if (delta < 1e-9) break;
            }
        }
        ext = Extreme{best, std::move(p)};
    }

    std::optional<Distribution> to_dist(std::vector<double> p) const {
        for (double& v : p) v = std::max(v, 0.0);
        try {
            return Distribution(std::move(p));
        } catch (const DomainError&) {
            return std::nullopt;
        }
    }
};

} // namespace

OracleOutcome oracle_bounds(const Program& program, std::size_t query_index,
                            const OracleConfig& cfg) {
    if (query_index >= program.queries.size())
        throw DomainError("query index out of range");
    Engine engine(program, cfg);
    return engine.run()[query_index];
}

std::vector<OracleOutcome> oracle_answer(const Program& program, const OracleConfig& cfg) {
    Engine engine(program, cfg);
    return engine.run();
}

} // namespace relq
