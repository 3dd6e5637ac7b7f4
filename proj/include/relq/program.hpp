#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relq/coefficients.hpp"
#include "relq/constraints.hpp"
#include "relq/partition.hpp"

namespace relq {

/// A coefficient to bound, in the range its surface spelling requests
/// (Q/F in the odds range, QS/FS in the symmetric range, ...).
struct Query {
    CoeffFamily family;
    BoolExpr a;
    std::optional<BoolExpr> b;
    RangeType range;

    std::string label() const {
        return Coefficient{family, a, b, range, ExtReal::of(0)}.label();
    }
};

/// A parsed constraint program: event table, declarations, queries.
struct Program {
    EventTable events;
    std::vector<Declaration> declarations;
    std::vector<Query> queries;
};

} // namespace relq
