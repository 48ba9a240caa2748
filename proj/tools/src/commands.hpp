#pragma once

/// Subcommand implementations. Each returns the process exit code:
/// 0 on success, 1 when a run or certification fails; configuration
/// problems are raised as ConfigError and mapped to 2 by the driver.

#include <string>

#include "config.hpp"

namespace crossdiff::cli {

int cmd_simulate(const std::string& config_path, const CommonOverrides& overrides);
int cmd_check_assumptions(const std::string& config_path, const CommonOverrides& overrides);
int cmd_converge(const std::string& config_path, const CommonOverrides& overrides);
int cmd_sweep(const std::string& config_path, const CommonOverrides& overrides);

}  // namespace crossdiff::cli
