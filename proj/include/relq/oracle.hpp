#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "relq/program.hpp"
#include "relq/solver.hpp"

namespace relq {

/// Brute-force reference bounds: uniform simplex samples projected onto the
/// linear equalities, accepted when every declaration holds within tol,
/// evaluated on the queries, sharpened by coordinatewise refinement.
/// Independent of the LP machinery; capped at n <= 4.
struct OracleConfig {
    long samples = 1'000'000;
    std::uint64_t seed = 42;
    int refine_steps = 100;
    double tol = 1e-7;
};

struct OracleOutcome {
    /// Status InnerApprox when any sample was accepted; empty otherwise
    /// ("no feasible sample found" is evidence, never a verdict).
    std::optional<Interval> interval;
    long accepted = 0;
};

/// Bounds for one query of the program.
OracleOutcome oracle_bounds(const Program& program, std::size_t query_index,
                            const OracleConfig& cfg = {});

/// Bounds for every query (samples drawn once, shared across queries).
std::vector<OracleOutcome> oracle_answer(const Program& program, const OracleConfig& cfg = {});

} // namespace relq
