#include "relq/constraints.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace relq {

namespace {

double dot(const std::vector<double>& c, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * p[i];
    return s;
}

std::string fmt(double v) {
    if (std::isinf(v)) return "inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<double> mask_coeff(const AtomMask& m) {
    std::vector<double> c(m.bit_count(), 0.0);
    for (std::size_t a = 0; a < m.bit_count(); ++a)
        if (m.test(a)) c[a] = 1.0;
    return c;
}

std::vector<double> axpy(const std::vector<double>& a, double k, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + k * b[i];
    return r;
}

std::vector<double> negate(std::vector<double> a) {
    for (double& v : a) v = -v;
    return a;
}

} // namespace

double LinearConstraint::residual(const std::vector<double>& p) const {
    return dot(coeff, p) - rhs;
}

bool LinearConstraint::satisfied(const std::vector<double>& p, double tol) const {
    const double r = residual(p);
    return rel == Rel::Eq ? std::abs(r) <= tol : r >= -tol;
}

double BilinearConstraint::residual(const std::vector<double>& p) const {
    return dot(l1, p) * dot(l2, p) - scale * dot(l3, p) * dot(l4, p);
}

bool BilinearConstraint::satisfied(const std::vector<double>& p, double tol) const {
    const double r = residual(p);
    return rel == Rel::Eq ? std::abs(r) <= tol : r >= -tol;
}

std::string CoeffAssert::label() const {
    const Coefficient c{family, a, b, range, ExtReal::of(0)};
    std::string out = c.label();
    if (is_interval)
        out += " in [" + fmt(lo) + ", " + fmt(hi) + "]";
    else
        out += " = " + fmt(lo);
    return out;
}

std::string BoolDefine::label() const {
    return "define " + event + " = " + expr.to_string();
}

std::string ExchBlock::label() const {
    std::string out = "exchangeable ";
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i) out += ", ";
        out += events[i];
    }
    return out;
}

std::string label(const Declaration& d) {
    return std::visit([](const auto& x) { return x.label(); }, d);
}

namespace {

// Emitters keep a fixed order: main relation(s) low-then-high, then guards.
struct Emitter {
    std::vector<AtomicConstraint> out;
    std::string origin;

    void lin_eq(std::vector<double> c, double rhs) {
        out.push_back(LinearConstraint{std::move(c), Rel::Eq, rhs, origin});
    }
    void lin_ge(std::vector<double> c, double rhs) {
        out.push_back(LinearConstraint{std::move(c), Rel::Ge, rhs, origin});
    }
    // (n1.p)(n2.p) - scale (d1.p)(d2.p) REL 0
    void bil(std::vector<double> n1, std::vector<double> n2, double scale,
             std::vector<double> d1, std::vector<double> d2, Rel rel) {
        out.push_back(BilinearConstraint{std::move(n1), std::move(n2), std::move(d1),
                                         std::move(d2), scale, rel, origin});
    }
    // (n1.p)(n2.p) = 0
    void bil_zero(std::vector<double> n1, std::vector<double> n2) {
        const std::vector<double> zero(n1.size(), 0.0);
        bil(std::move(n1), std::move(n2), 0.0, zero, zero, Rel::Eq);
    }
    void guard(const std::vector<double>& event_coeff, double eps) {
        lin_ge(event_coeff, eps);
    }
};

// Linear family "form . p = c * base . p" with interval support.
// c ranges over the canonical (converted) values; hi may be +inf.
void emit_scaled_pair(Emitter& em, const std::vector<double>& form,
                      const std::vector<double>& base, double lo, double hi,
                      bool interval) {
    if (!interval || std::isinf(lo)) {
        if (std::isinf(lo)) {
            em.lin_eq(base, 0.0); // ratio pinned at infinity: denominator part is 0
            return;
        }
        em.lin_eq(axpy(form, -lo, base), 0.0);
        return;
    }
    em.lin_ge(axpy(form, -lo, base), 0.0); // form >= lo * base
    if (!std::isinf(hi))
        em.lin_ge(axpy(negate(form), hi, base), 0.0); // hi * base - form >= 0
}

} // namespace

std::vector<AtomicConstraint> define_event(const std::string& name, const BoolExpr& expr,
                                           const EventTable& table) {
    if (!table.contains(name))
        throw NameError("unknown event '" + name + "'");
    if (expr.mentions(name))
        throw DomainError("self-referential definition of '" + name + "'");
    const AtomMask disagree = atoms_of(BoolExpr::event(name) ^ expr, table);
    std::vector<AtomicConstraint> out;
    const std::string origin = BoolDefine{name, expr}.label();
    for (std::size_t a : disagree.indices()) {
        std::vector<double> c(table.atom_count(), 0.0);
        c[a] = 1.0;
        out.push_back(LinearConstraint{std::move(c), Rel::Eq, 0.0, origin});
    }
    return out;
}

std::vector<AtomicConstraint> expand_exchangeable(const ExchBlock& block,
                                                  const EventTable& table) {
    if (block.events.size() < 2)
        throw DomainError("exchangeable block needs at least 2 events");
    const std::size_t n = table.size();
    std::size_t block_bits = 0;
    for (const auto& name : block.events) {
        auto idx = table.index_of(name);
        if (!idx)
            throw NameError("unknown event '" + name + "' in exchangeable block");
        block_bits |= std::size_t{1} << (n - 1 - *idx);
    }

    // Atoms are equivalent iff they agree outside the block and have the same
    // popcount inside it.  Scan ascending; the first atom of each class is its
    // representative, every later member contributes one equality against it.
    const std::size_t atoms = table.atom_count();
    std::vector<AtomicConstraint> out;
    const std::string origin = block.label();
    struct Key {
        std::size_t outside;
        int inside_pop;
        bool operator==(const Key&) const = default;
    };
    std::vector<std::pair<Key, std::size_t>> reps;
    for (std::size_t a = 0; a < atoms; ++a) {
        const Key k{a & ~block_bits, std::popcount(a & block_bits)};
        bool found = false;
        for (const auto& [key, r] : reps) {
            if (key == k) {
                std::vector<double> c(atoms, 0.0);
                c[r] = 1.0;
                c[a] = -1.0;
                out.push_back(LinearConstraint{std::move(c), Rel::Eq, 0.0, origin});
                found = true;
                break;
            }
        }
        if (!found) reps.emplace_back(k, a);
    }
    return out;
}

namespace {

std::vector<AtomicConstraint> normalize_assert(const CoeffAssert& d, const EventTable& table,
                                               double eps_cond) {
    Emitter em;
    em.origin = d.label();

    // Convert asserted endpoints to the family's canonical range: P for
    // probability families, O for ratio families.
    const RangeType canon =
        (d.family == CoeffFamily::P || d.family == CoeffFamily::CondP || d.family == CoeffFamily::O)
            ? RangeType::P
            : RangeType::O;
    auto to_canon = [&](double v) -> double {
        ExtReal r = std::isinf(v) ? ExtReal::infinity() : ExtReal::of(v);
        // Family O is declared in the O range but normalized as P(E).
        const RangeType target = (d.family == CoeffFamily::O) ? RangeType::P : canon;
        return convert(r, d.range, target).value();
    };
    const double lo = to_canon(d.lo);
    const double hi = to_canon(d.hi);
    if (lo > hi)
        throw DomainError("interval lower bound exceeds upper bound in " + d.label());

    const AtomMask ma = atoms_of(d.a, table);

    switch (d.family) {
        case CoeffFamily::P:
        case CoeffFamily::O: { // O(E) = c handled as P(E) = c/(1+c)
            const auto c = mask_coeff(ma);
            if (!d.is_interval) {
                em.lin_eq(c, lo);
            } else {
                em.lin_ge(c, lo);
                em.lin_ge(negate(c), -hi);
            }
            break;
        }
        case CoeffFamily::CondP: {
            const AtomMask mb = atoms_of(*d.b, table);
            const auto num = mask_coeff(ma & mb);
            const auto den = mask_coeff(mb);
            emit_scaled_pair(em, num, den, lo, hi, d.is_interval);
            em.guard(den, eps_cond);
            break;
        }
        case CoeffFamily::CondO: {
            const AtomMask mb = atoms_of(*d.b, table);
            const auto num = mask_coeff(ma & mb);
            const auto den = mask_coeff(~ma & mb);
            emit_scaled_pair(em, num, den, lo, hi, d.is_interval);
            em.guard(mask_coeff(mb), eps_cond);
            break;
        }
        case CoeffFamily::FOdds: {
            const AtomMask mb = atoms_of(*d.b, table);
            const auto num = mask_coeff(ma & ~mb);
            const auto den = mask_coeff(~ma & mb);
            emit_scaled_pair(em, num, den, lo, hi, d.is_interval);
            break;
        }
        case CoeffFamily::FProb: {
            const AtomMask mb = atoms_of(*d.b, table);
            const auto num = mask_coeff(ma);
            const auto den = mask_coeff(mb);
            emit_scaled_pair(em, num, den, lo, hi, d.is_interval);
            break;
        }
        case CoeffFamily::QOdds:
        case CoeffFamily::QProb: {
            const AtomMask mb = atoms_of(*d.b, table);
            // numerator/denominator products: x*w / y*z for Q(a|b),
            // x*(y+w) / y*(x+z) for Q(a:b)
            std::vector<double> n1 = mask_coeff(ma & mb);
            std::vector<double> n2, d1 = mask_coeff(ma & ~mb), d2;
            if (d.family == CoeffFamily::QOdds) {
                n2 = mask_coeff(~ma & ~mb);
                d2 = mask_coeff(~ma & mb);
            } else {
                n2 = mask_coeff(~mb);
                d2 = mask_coeff(mb);
            }
            if (!d.is_interval || std::isinf(lo)) {
                if (std::isinf(lo))
                    em.bil_zero(d1, d2); // pinned at infinity: denominator product is 0
                else
                    em.bil(n1, n2, lo, d1, d2, Rel::Eq);
            } else {
                em.bil(n1, n2, lo, d1, d2, Rel::Ge); // num - lo*den >= 0
                if (std::isinf(hi)) {
                    // no upper constraint
                } else if (hi == 0.0) {
                    em.bil_zero(n1, n2);
                } else {
                    em.bil(d1, d2, 1.0 / hi, n1, n2, Rel::Ge); // den - num/hi >= 0
                }
            }
            em.guard(mask_coeff(mb), eps_cond);
            em.guard(mask_coeff(~mb), eps_cond);
            break;
        }
    }
    return std::move(em.out);
}

} // namespace

std::vector<AtomicConstraint> normalize(const Declaration& d, const EventTable& table,
                                        double eps_cond) {
    if (const auto* a = std::get_if<CoeffAssert>(&d))
        return normalize_assert(*a, table, eps_cond);
    if (const auto* b = std::get_if<BoolDefine>(&d))
        return define_event(b->event, b->expr, table);
    return expand_exchangeable(std::get<ExchBlock>(d), table);
}

ConstraintSummary classify(const std::vector<AtomicConstraint>& constraints) {
    ConstraintSummary s;
    for (const auto& c : constraints) {
        if (std::holds_alternative<LinearConstraint>(c))
            ++s.n_linear;
        else
            ++s.n_bilinear;
    }
    return s;
}

ConstraintSet normalize_all(const std::vector<Declaration>& decls, const EventTable& table,
                            double eps_cond) {
    ConstraintSet set;
    set.dimension = table.atom_count();
    for (const auto& d : decls) {
        for (auto& c : normalize(d, table, eps_cond)) {
            if (auto* lin = std::get_if<LinearConstraint>(&c))
                set.linear.push_back(std::move(*lin));
            else
                set.bilinear.push_back(std::move(std::get<BilinearConstraint>(c)));
        }
    }
    return set;
}

} // namespace relq
