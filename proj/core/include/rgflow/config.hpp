#pragma once

#include <string>

#include "rgflow/initcond.hpp"

namespace rg {

// JSON-backed run description consumed by the command-line tools.
struct RunConfig {
  ModelParams mp;
  int n_scales = 8;
  int L_max = 3;
  int c_max = 2;
  double pattern_floor = 0.0;
  bool deg2_L2 = false;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& rc);
RunConfig load_run_config(const std::string& path);

}  // namespace rg
