#pragma once

#include <string>

#include "stirsap/experiment.hpp"

namespace stirsap {

// Single JSON document with nested sections transmon/pulse/control/propagation/
// optimizer/scan. Unknown keys are errors at every level.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Fully resolved round-trippable document (doubles serialize losslessly).
std::string config_to_json(const ExperimentConfig& cfg);

} // namespace stirsap
