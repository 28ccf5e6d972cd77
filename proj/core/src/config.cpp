#include "rgflow/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace rg {

namespace {
using nlohmann::json;

json to_json(const RunConfig& rc) {
  return json{{"g", rc.mp.g},
              {"p", rc.mp.p},
              {"sigma", rc.mp.sigma},
              {"rho", rc.mp.rho},
              {"profile", rc.mp.profile == FormFactor::Profile::sharp
                              ? "sharp"
                              : "smooth"},
              {"kappa_uv", rc.mp.kappa_uv},
              {"kappa_window", rc.mp.kappa_window},
              {"grid_nodes", rc.mp.grid_nodes},
              {"n_scales", rc.n_scales},
              {"L_max", rc.L_max},
              {"c_max", rc.c_max},
              {"pattern_floor", rc.pattern_floor},
              {"deg2_L2", rc.deg2_L2}};
}

RunConfig from_json(const json& j) {
  RunConfig rc;
  rc.mp.g = j.value("g", rc.mp.g);
  rc.mp.p = j.value("p", rc.mp.p);
  rc.mp.sigma = j.value("sigma", rc.mp.sigma);
  rc.mp.rho = j.value("rho", rc.mp.rho);
  const std::string prof = j.value("profile", std::string("smooth"));
  if (prof == "sharp")
    rc.mp.profile = FormFactor::Profile::sharp;
  else if (prof == "smooth")
    rc.mp.profile = FormFactor::Profile::smooth;
  else
    throw std::runtime_error("unknown kappa profile: " + prof);
  rc.mp.kappa_uv = j.value("kappa_uv", rc.mp.kappa_uv);
  rc.mp.kappa_window = j.value("kappa_window", rc.mp.kappa_window);
  rc.mp.grid_nodes = j.value("grid_nodes", rc.mp.grid_nodes);
  rc.n_scales = j.value("n_scales", rc.n_scales);
  rc.L_max = j.value("L_max", rc.L_max);
  rc.c_max = j.value("c_max", rc.c_max);
  rc.pattern_floor = j.value("pattern_floor", rc.pattern_floor);
  rc.deg2_L2 = j.value("deg2_L2", rc.deg2_L2);
  return rc;
}
}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  return from_json(json::parse(text));
}

std::string run_config_to_json(const RunConfig& rc) {
  return to_json(rc).dump(2);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  return from_json(j);
}

}  // namespace rg
