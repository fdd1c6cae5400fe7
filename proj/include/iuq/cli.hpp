#pragma once

#include <string>
#include <vector>

#include "iuq/harness.hpp"

namespace iuq {

/// Parses the arguments that follow `iuq run` into a config: defaults, then
/// the --config file, then explicit flags.
ExperimentConfig parse_run_args(const std::vector<std::string>& args);

/// Entry point of the `iuq` tool; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace iuq
