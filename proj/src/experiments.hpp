#pragma once

#include <json.hpp>

#include "rmtlab/harness.hpp"

namespace rmtlab::harness {

// Implemented in experiments.cpp: the canned experiment bodies. Returns the
// aggregate block and sets *pass against the config's thresholds.
nlohmann::ordered_json run_named_experiment(const std::string& name,
                                            const ExperimentConfig& config, bool* pass);

}  // namespace rmtlab::harness
