#pragma once

namespace relq {

/// Entry point for the relq command-line tool.
/// Exit codes: 0 success, 1 infeasible system, 2 malformed input or parse
/// error, 3 numeric failure (including undecided bilinear feasibility).
int cli_main(int argc, char** argv);

} // namespace relq
