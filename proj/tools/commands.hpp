#pragma once

#include "run_config.hpp"

namespace flpre::cli {

// Each returns the process exit code; failures are thrown as flpre errors.
int cmd_simulate(const RunConfig& config);
int cmd_fit(const RunConfig& config);
int cmd_subsample(const RunConfig& config);
int cmd_benchmark(const RunConfig& config);
int cmd_predict(const RunConfig& config);

}  // namespace flpre::cli
