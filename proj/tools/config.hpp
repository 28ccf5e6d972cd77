#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

#include "rgflow/initcond.hpp"

namespace rgcli {

using nlohmann::json;

// Run configuration: the physical model plus driver knobs. Everything has a
// default so an empty config is a valid smoke run.
struct RunConfig {
  rg::ModelParams model;
  int n_scales = 6;

  // Fock oracle discretization.
  int oracle_radial = 4;
  int oracle_ncos = 2;
  int oracle_nphi = 4;
  int oracle_nmax = 2;
  bool oracle_matched = true;  // put the flow kernels on the oracle rule
};

inline RunConfig parse_config(const json& j) {
  RunConfig rc;
  const json m = j.value("model", json::object());
  rc.model.g = m.value("g", rc.model.g);
  rc.model.p = m.value("p", rc.model.p);
  rc.model.sigma = m.value("sigma", rc.model.sigma);
  rc.model.rho = m.value("rho", rc.model.rho);
  rc.model.kappa_uv = m.value("kappa_uv", rc.model.kappa_uv);
  rc.model.kappa_window = m.value("kappa_window", rc.model.kappa_window);
  rc.model.grid_nodes = m.value("grid_nodes", rc.model.grid_nodes);
  const std::string prof = m.value("profile", std::string("smooth"));
  if (prof == "smooth") {
    rc.model.profile = rg::FormFactor::Profile::smooth;
  } else if (prof == "sharp") {
    rc.model.profile = rg::FormFactor::Profile::sharp;
  } else {
    throw std::runtime_error("config: unknown profile '" + prof + "'");
  }

  rc.n_scales = j.value("n_scales", rc.n_scales);
  const json o = j.value("oracle", json::object());
  rc.oracle_radial = o.value("radial", rc.oracle_radial);
  rc.oracle_ncos = o.value("n_cos", rc.oracle_ncos);
  rc.oracle_nphi = o.value("n_phi", rc.oracle_nphi);
  rc.oracle_nmax = o.value("nmax", rc.oracle_nmax);
  rc.oracle_matched = o.value("matched", rc.oracle_matched);
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  in >> j;
  return parse_config(j);
}

inline json model_echo(const RunConfig& rc) {
  return json{{"g", rc.model.g},
              {"p", rc.model.p},
              {"sigma", rc.model.sigma},
              {"rho", rc.model.rho},
              {"profile", rc.model.profile == rg::FormFactor::Profile::sharp
                              ? "sharp"
                              : "smooth"},
              {"kappa_uv", rc.model.kappa_uv},
              {"kappa_window", rc.model.kappa_window},
              {"grid_nodes", rc.model.grid_nodes}};
}

// Reports must be byte-identical for identical (config, seed): no wall-clock
// or host fields here; timings go to stderr.
inline void emit_report(const json& rep, const std::string& out_path) {
  const std::string text = rep.dump(2) + "\n";
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open " + out_path);
  out << text;
}

}  // namespace rgcli
