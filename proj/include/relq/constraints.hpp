#pragma once

#include <string>
#include <variant>
#include <vector>

#include "relq/coefficients.hpp"
#include "relq/partition.hpp"

namespace relq {

enum class Rel { Eq, Ge }; // lhs = rhs or lhs >= rhs

/// coeff . p  REL  rhs, over the atom probabilities p.
struct LinearConstraint {
    std::vector<double> coeff;
    Rel rel;
    double rhs;
    std::string origin; // source declaration, for diagnostics

    double residual(const std::vector<double>& p) const; // lhs - rhs
    bool satisfied(const std::vector<double>& p, double tol) const;
};

/// (l1 . p)(l2 . p) - scale * (l3 . p)(l4 . p)  REL  0.
struct BilinearConstraint {
    std::vector<double> l1, l2, l3, l4;
    double scale;
    Rel rel;
    std::string origin;

    double residual(const std::vector<double>& p) const;
    bool satisfied(const std::vector<double>& p, double tol) const;
};

using AtomicConstraint = std::variant<LinearConstraint, BilinearConstraint>;

/// A coefficient assertion: family(args) = value or family(args) in [lo, hi],
/// stated in the declared range.  Equalities have lo == hi.
struct CoeffAssert {
    CoeffFamily family;
    BoolExpr a;
    std::optional<BoolExpr> b;
    RangeType range;
    double lo, hi;
    bool is_interval;

    std::string label() const;
};

/// Ties an event to a boolean expression: atoms where they disagree get
/// probability zero.
struct BoolDefine {
    std::string event;
    BoolExpr expr;

    std::string label() const;
};

/// Declares a set of events exchangeable: atom probabilities are invariant
/// under permutations of the block's truth values.
struct ExchBlock {
    std::vector<std::string> events;

    std::string label() const;
};

using Declaration = std::variant<CoeffAssert, BoolDefine, ExchBlock>;

std::string label(const Declaration& d);

/// Normalize one declaration to atom-level constraints.  Coefficient values
/// are first converted to the family's canonical range (P for probability
/// families, O for ratio families).  Conditional and Quetelet assertions also
/// emit guards P(conditioning event) >= eps_cond.
std::vector<AtomicConstraint> normalize(const Declaration& d, const EventTable& table,
                                        double eps_cond);

/// Constraints for "event := expr": P(atom) = 0 at every atom in the mask of
/// (event XOR expr).  Throws if expr mentions the event itself.
std::vector<AtomicConstraint> define_event(const std::string& name, const BoolExpr& expr,
                                           const EventTable& table);

/// Spanning equalities P(atom_a) = P(atom_b) over the orbit classes of the
/// block's bit permutations (non-block bits fixed).  A full block over n
/// events yields 2^n - (n+1) equalities.
std::vector<AtomicConstraint> expand_exchangeable(const ExchBlock& block,
                                                  const EventTable& table);

struct ConstraintSummary {
    std::size_t n_linear = 0;
    std::size_t n_bilinear = 0;

    bool operator==(const ConstraintSummary&) const = default;
};

ConstraintSummary classify(const std::vector<AtomicConstraint>& constraints);

/// Normalized view of a whole declaration list, split by class.
struct ConstraintSet {
    std::vector<LinearConstraint> linear;
    std::vector<BilinearConstraint> bilinear;
    std::size_t dimension = 0;
};

ConstraintSet normalize_all(const std::vector<Declaration>& decls, const EventTable& table,
                            double eps_cond);

} // namespace relq
