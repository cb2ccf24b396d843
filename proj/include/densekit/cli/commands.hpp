#pragma once

namespace densekit::cli {

/// Parses argv, dispatches the subcommand, maps errors to exit codes:
/// 0 success, 1 validation failure, 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace densekit::cli
