#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relq/partition.hpp"

namespace relq {

/// The three value ranges: probability [0,1], odds [0,inf], symmetric [-1,1].
enum class RangeType { P, O, S };

std::string to_string(RangeType r);
std::optional<RangeType> range_from_string(const std::string& s);

/// Extended real: a finite value, +infinity, or UNDEFINED (0/0).
/// UNDEFINED is represented as NaN; it never compares equal to anything.
class ExtReal {
public:
    ExtReal() : v_(0.0) {}

    static ExtReal of(double v) { return ExtReal(v); }
    static ExtReal infinity();
    static ExtReal undef();

    /// num/den with the conventions: positive/0 -> +inf, 0/0 -> UNDEFINED.
    /// num and den must be nonnegative.
    static ExtReal ratio(double num, double den);

    bool is_undef() const;
    bool is_inf() const;
    bool is_finite() const { return !is_undef() && !is_inf(); }
    double value() const { return v_; }

    /// "inf", "undef", or the value with 12 significant digits.
    std::string format() const;

private:
    explicit ExtReal(double v) : v_(v) {}
    double v_;
};

/// Coefficient families.  P and O take one argument; the rest take two.
/// QOdds/QProb measure independence (value 1 at independence); FOdds/FProb
/// measure exchangeability (value 1 when the events are exchangeable).
enum class CoeffFamily { P, O, CondP, CondO, QOdds, QProb, FOdds, FProb };

std::string to_string(CoeffFamily f);
bool family_takes_two_args(CoeffFamily f);

/// Natural range of a family's value (before any S-type rendering).
RangeType main_range(CoeffFamily f);

/// One evaluated coefficient: family + arguments + range + value.
struct Coefficient {
    CoeffFamily family;
    BoolExpr a;
    std::optional<BoolExpr> b;
    RangeType range;
    ExtReal value;

    /// Display label, e.g. "P(A|B)", "Q(A:B)", "FS(A|B)".
    std::string label() const;
};

/// The four block probabilities of an (a, b) pair:
/// x = P(a&b), y = P(a&-b), z = P(-a&b), w = P(-a&-b).
struct Blocks {
    double x, y, z, w;
};

Blocks blocks_of(const Distribution& dist, const EventTable& table,
                 const BoolExpr& a, const BoolExpr& b);

/// P(a|b) = P(a&b)/P(b); UNDEFINED when P(b) = 0.
ExtReal cond_p(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b);

/// O(a|b) = P(a&b)/P(-a&b).
ExtReal cond_o(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b);

/// Quetelet odds ratio Q(a|b) = P(a&b)P(-a&-b) / (P(a&-b)P(-a&b)); symmetric
/// in (a, b); equals 1 iff a and b are independent.
ExtReal q_odds(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b);

/// Quetelet probability ratio Q(a:b) = P(a|b)/P(a|-b).
ExtReal q_prob(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b);

/// de Finetti odds ratio F(a|b) = O(a|b)/O(b|a) = P(a&-b)/P(-a&b).
ExtReal f_odds(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b);

/// de Finetti probability ratio F(a:b) = P(a|b)/P(b|a); equals P(a)/P(b)
/// whenever P(a&b) > 0.
ExtReal f_prob(const Distribution& dist, const EventTable& table,
               const BoolExpr& a, const BoolExpr& b);

/// Convert a value between ranges.  UNDEFINED passes through.  Throws
/// DomainError when v lies outside the source range.
ExtReal convert(ExtReal v, RangeType from, RangeType to);
double convert(double v, RangeType from, RangeType to);

/// Full coefficient block for the pair (a, b): marginals, odds, the four
/// conditional probabilities and odds, Q and F in both forms, and their
/// S-type renderings.
std::vector<Coefficient> coefficient_report(const Distribution& dist,
                                            const EventTable& table,
                                            const BoolExpr& a, const BoolExpr& b);

/// Evaluate one family on a distribution, in the family's main range.
ExtReal eval_coefficient(CoeffFamily family, const Distribution& dist,
                         const EventTable& table, const BoolExpr& a,
                         const std::optional<BoolExpr>& b);

} // namespace relq
