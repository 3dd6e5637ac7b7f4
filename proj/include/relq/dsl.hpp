#pragma once

#include <string>
#include <string_view>

#include "relq/program.hpp"

namespace relq {

/// Parse a constraint program.  Statements:
///
///   events A, B, C;            # declares the event table (first, once)
///   define C = A & B;          # boolean definition (C must be declared)
///   assert P(A) = 0.3;         # coefficient equality
///   assert Q(A|B) in [1, 6];   # coefficient interval ("inf" upper bound ok)
///   exchangeable A, B;         # exchangeability block
///   query QS(A|B);             # coefficient to bound
///
/// Families: P, O (optional "|"), Q, F, QS, FS (one "|" or ":").  Expression
/// operators: "-" (not), "&" (and), "or", "^" (xor), parentheses, TRUE/FALSE.
/// "#" starts a comment.  Throws ParseError with a 1-based position.
Program parse(std::string_view source);

/// Canonical text of a program; reparsing yields a structurally equal one.
std::string pretty_print(const Program& p);

/// Structural equality (same events, declarations, and queries).
bool same_program(const Program& a, const Program& b);

} // namespace relq
