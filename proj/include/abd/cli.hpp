#pragma once

namespace abd {

/// Batch front end. Subcommands: design, verify, construct-models,
/// proxy-check, baseline, emit-table1. Returns the process exit code:
/// 0 success, 2 validation/config error, 3 infeasible search range.
int run_cli(int argc, const char* const* argv);

}  // namespace abd
