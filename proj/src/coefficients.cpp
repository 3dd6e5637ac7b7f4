#include "relq/coefficients.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace relq {

std::string to_string(RangeType r) {
    switch (r) {
        case RangeType::P: return "P";
        case RangeType::O: return "O";
        case RangeType::S: return "S";
    }
    return "?";
}

std::optional<RangeType> range_from_string(const std::string& s) {
    if (s == "P" || s == "p") return RangeType::P;
    if (s == "O" || s == "o") return RangeType::O;
    if (s == "S" || s == "s") return RangeType::S;
    return std::nullopt;
}

ExtReal ExtReal::infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }
ExtReal ExtReal::undef() { return ExtReal(std::numeric_limits<double>::quiet_NaN()); }

ExtReal ExtReal::ratio(double num, double den) {
    if (den > 0.0) return ExtReal(num / den);
    if (num > 0.0) return infinity();
    return undef();
}

bool ExtReal::is_undef() const { return std::isnan(v_); }
bool ExtReal::is_inf() const { return std::isinf(v_); }

std::string ExtReal::format() const {
    if (is_undef()) return "undef";
    if (is_inf()) return "inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v_);
    return buf;
}

std::string to_string(CoeffFamily f) {
    switch (f) {
        case CoeffFamily::P: return "P";
        case CoeffFamily::O: return "O";
        case CoeffFamily::CondP: return "CondP";
        case CoeffFamily::CondO: return "CondO";
        case CoeffFamily::QOdds: return "QOdds";
        case CoeffFamily::QProb: return "QProb";
        case CoeffFamily::FOdds: return "FOdds";
        case CoeffFamily::FProb: return "FProb";
    }
    return "?";
}

bool family_takes_two_args(CoeffFamily f) {
    return f != CoeffFamily::P && f != CoeffFamily::O;
}

RangeType main_range(CoeffFamily f) {
    switch (f) {
        case CoeffFamily::P:
        case CoeffFamily::CondP: return RangeType::P;
        default: return RangeType::O;
    }
}

std::string Coefficient::label() const {
    std::string head;
    char sep = '|';
    switch (family) {
        case CoeffFamily::P:
        case CoeffFamily::CondP: head = "P"; break;
        case CoeffFamily::O:
        case CoeffFamily::CondO: head = "O"; break;
        case CoeffFamily::QOdds: head = "Q"; break;
        case CoeffFamily::QProb: head = "Q"; sep = ':'; break;
        case CoeffFamily::FOdds: head = "F"; break;
        case CoeffFamily::FProb: head = "F"; sep = ':'; break;
    }
    if (range == RangeType::S) head += "S";
    std::string out = head + "(" + a.to_string();
    if (b) {
        out += sep;
        out += b->to_string();
    }
    out += ")";
    return out;
}

Blocks blocks_of(const Distribution& dist, const EventTable& table,
                 const BoolExpr& a, const BoolExpr& b) {
    const AtomMask ma = atoms_of(a, table);
    const AtomMask mb = atoms_of(b, table);
    return Blocks{prob(dist, ma & mb), prob(dist, ma & ~mb),
                  prob(dist, ~ma & mb), prob(dist, ~ma & ~mb)};
}

ExtReal cond_p(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b) {
    const Blocks k = blocks_of(dist, table, a, b);
    return ExtReal::ratio(k.x, k.x + k.z);
}

ExtReal cond_o(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b) {
    const Blocks k = blocks_of(dist, table, a, b);
    return ExtReal::ratio(k.x, k.z);
}

ExtReal q_odds(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b) {
    const Blocks k = blocks_of(dist, table, a, b);
    return ExtReal::ratio(k.x * k.w, k.y * k.z);
}

ExtReal q_prob(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b) {
    // P(a|b) / P(a|-b) = x(y+w) / (y(x+z))
    const Blocks k = blocks_of(dist, table, a, b);
    return ExtReal::ratio(k.x * (k.y + k.w), k.y * (k.x + k.z));
}

ExtReal f_odds(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b) {
    const Blocks k = blocks_of(dist, table, a, b);
    return ExtReal::ratio(k.y, k.z);
}

ExtReal f_prob(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b) {
    // P(a|b) / P(b|a) = (x+y) / (x+z) when x > 0; with x = 0 the quotient
    // degenerates to 0/0 (or has an undefined operand) either way.
    const Blocks k = blocks_of(dist, table, a, b);
    if (k.x == 0.0) return ExtReal::undef();
    return ExtReal::ratio(k.x + k.y, k.x + k.z);
}

namespace {

void check_source_range(double v, RangeType from) {
    switch (from) {
        case RangeType::P:
            if (!(v >= 0.0 && v <= 1.0))
                throw DomainError("value " + std::to_string(v) + " outside P range [0,1]");
            break;
        case RangeType::O:
            if (!(v >= 0.0))
                throw DomainError("value " + std::to_string(v) + " outside O range [0,inf]");
            break;
        case RangeType::S:
            if (!(v >= -1.0 && v <= 1.0))
                throw DomainError("value " + std::to_string(v) + " outside S range [-1,1]");
            break;
    }
}

// The conversion table; v is finite and in the source domain.
double convert_finite(double v, RangeType from, RangeType to) {
    if (from == to) return v;
    // route through O? direct formulas are all simple; write them out.
    switch (from) {
        case RangeType::P:
            if (to == RangeType::O) return v / (1.0 - v); // v=1 handled by caller
            return 2.0 * v - 1.0;                         // to S
        case RangeType::O:
            if (to == RangeType::P) return v / (1.0 + v);
            return (v - 1.0) / (v + 1.0);                 // to S
        case RangeType::S:
            if (to == RangeType::P) return (v + 1.0) / 2.0;
            return (1.0 + v) / (1.0 - v);                 // to O; v=1 handled by caller
    }
    return v;
}

} // namespace

ExtReal convert(ExtReal v, RangeType from, RangeType to) {
    if (v.is_undef()) return ExtReal::undef();
    if (v.is_inf()) {
        if (from != RangeType::O)
            throw DomainError("infinite value only lies in the O range");
        // boundary map: O=inf <-> P=1 <-> S=1
        if (to == RangeType::O) return ExtReal::infinity();
        return ExtReal::of(1.0);
    }
    const double x = v.value();
    check_source_range(x, from);
    // boundary cases that map to +inf
    if (to == RangeType::O) {
        if ((from == RangeType::P && x == 1.0) || (from == RangeType::S && x == 1.0))
            return ExtReal::infinity();
    }
    return ExtReal::of(convert_finite(x, from, to));
}

double convert(double v, RangeType from, RangeType to) {
    const ExtReal r = convert(ExtReal::of(v), from, to);
    return r.value(); // +inf propagates as the double infinity
}

ExtReal eval_coefficient(CoeffFamily family, const Distribution& dist,
                         const EventTable& table, const BoolExpr& a,
                         const std::optional<BoolExpr>& b) {
    switch (family) {
        case CoeffFamily::P: {
            const AtomMask ma = atoms_of(a, table);
            return ExtReal::of(prob(dist, ma));
        }
        case CoeffFamily::O: {
            const AtomMask ma = atoms_of(a, table);
            return ExtReal::ratio(prob(dist, ma), prob(dist, ~ma));
        }
        case CoeffFamily::CondP: return cond_p(dist, table, a, *b);
        case CoeffFamily::CondO: return cond_o(dist, table, a, *b);
        case CoeffFamily::QOdds: return q_odds(dist, table, a, *b);
        case CoeffFamily::QProb: return q_prob(dist, table, a, *b);
        case CoeffFamily::FOdds: return f_odds(dist, table, a, *b);
        case CoeffFamily::FProb: return f_prob(dist, table, a, *b);
    }
    return ExtReal::undef();
}

std::vector<Coefficient> coefficient_report(const Distribution& dist,
                                            const EventTable& table,
                                            const BoolExpr& a, const BoolExpr& b) {
    const Blocks k = blocks_of(dist, table, a, b);
    const BoolExpr na = !a, nb = !b;
    std::vector<Coefficient> out;
    auto add = [&out](CoeffFamily f, BoolExpr x, std::optional<BoolExpr> y,
                      RangeType r, ExtReal v) {
        out.push_back(Coefficient{f, std::move(x), std::move(y), r, v});
    };

    add(CoeffFamily::P, a, std::nullopt, RangeType::P, ExtReal::of(k.x + k.y));
    add(CoeffFamily::P, b, std::nullopt, RangeType::P, ExtReal::of(k.x + k.z));
    add(CoeffFamily::O, a, std::nullopt, RangeType::O, ExtReal::ratio(k.x + k.y, k.z + k.w));
    add(CoeffFamily::O, b, std::nullopt, RangeType::O, ExtReal::ratio(k.x + k.z, k.y + k.w));

    add(CoeffFamily::CondP, a, b, RangeType::P, cond_p(dist, table, a, b));
    add(CoeffFamily::CondP, a, nb, RangeType::P, cond_p(dist, table, a, nb));
    add(CoeffFamily::CondP, b, a, RangeType::P, cond_p(dist, table, b, a));
    add(CoeffFamily::CondP, b, na, RangeType::P, cond_p(dist, table, b, na));

    add(CoeffFamily::CondO, a, b, RangeType::O, cond_o(dist, table, a, b));
    add(CoeffFamily::CondO, a, nb, RangeType::O, cond_o(dist, table, a, nb));
    add(CoeffFamily::CondO, b, a, RangeType::O, cond_o(dist, table, b, a));
    add(CoeffFamily::CondO, b, na, RangeType::O, cond_o(dist, table, b, na));

    const ExtReal qo = q_odds(dist, table, a, b);
    const ExtReal qp = q_prob(dist, table, a, b);
    const ExtReal fo = f_odds(dist, table, a, b);
    const ExtReal fp = f_prob(dist, table, a, b);
    add(CoeffFamily::QOdds, a, b, RangeType::O, qo);
    add(CoeffFamily::QProb, a, b, RangeType::O, qp);
    add(CoeffFamily::FOdds, a, b, RangeType::O, fo);
    add(CoeffFamily::FProb, a, b, RangeType::O, fp);
    add(CoeffFamily::QOdds, a, b, RangeType::S, convert(qo, RangeType::O, RangeType::S));
    add(CoeffFamily::QProb, a, b, RangeType::S, convert(qp, RangeType::O, RangeType::S));
    add(CoeffFamily::FOdds, a, b, RangeType::S, convert(fo, RangeType::O, RangeType::S));
    add(CoeffFamily::FProb, a, b, RangeType::S, convert(fp, RangeType::O, RangeType::S));
    return out;
}

} // namespace relq
