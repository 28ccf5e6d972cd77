#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <string>

#include "config.hpp"
#include "rgflow/criteria.hpp"
#include "rgflow/fockoracle.hpp"
#include "rgflow/spectral.hpp"
#include "rgflow/sumrules.hpp"

namespace {

using namespace rgcli;

json budget_json(const rg::TruncationBudget& b) {
  return json{{"neumann_tail", b.neumann_tail},
              {"skipped_patterns", b.skipped_patterns},
              {"projection_residual", b.projection_residual},
              {"quadrature", b.quadrature},
              {"degree_spill", b.degree_spill},
              {"total", b.total()}};
}

json chain_json(const rg::FlowChain& ch) {
  json steps = json::array();
  for (std::size_t i = 0; i < ch.rec.size(); ++i) {
    const auto& r = ch.rec[i];
    steps.push_back(json{{"scale_from", r.scale_from},
                         {"E_new", r.E_new},
                         {"z_new", r.z_new},
                         {"dgamma_slope", r.dgamma.g[0]},
                         {"dgamma_curv_par", r.dgamma.h[rg::Jet2::hidx(3, 3)]},
                         {"proj_residual1", r.proj_residual1},
                         {"proj_residual2", r.proj_residual2},
                         {"min_denominator", r.min_denominator},
                         {"budget", budget_json(r.budget)}});
  }
  const rg::NormLattice lat = rg::default_norm_lattice();
  json scales = json::array();
  for (std::size_t n = 0; n < ch.fam.size(); ++n) {
    const auto& f = ch.fam[n];
    scales.push_back(
        json{{"scale", f.scale},
             {"sector", f.sector == rg::Sector::physical ? "physical"
                                                         : "reduced"},
             {"slot", ch.e[n]},
             {"lambda", rg::lambda_channel(f.T)},
             {"w1_norm", rg::family_w1_norm(f, lat, 0.1, false)}});
  }
  return json{{"steps", steps},
              {"scales", scales},
              {"sweeps", ch.sweeps},
              {"chain_residual", ch.chain_residual},
              {"budget", budget_json(ch.budget)}};
}

int cmd_constants(const RunConfig& rc, const std::string& out) {
  const rg::FormFactor ff = rc.model.form_factor();
  const rg::LeadingConstants lc =
      rg::leading_constants(ff, rg::Cutoff{0.75, 1.0}, rc.model.rho);
  const rg::FlowConstants fc = rg::flow_constants(rc.model);
  const json rep{{"model", model_echo(rc)},
                 {"a2_physical", rg::a2_physical(ff)},
                 {"a2_bare", rg::a2_bare(ff)},
                 {"tilde_c2", lc.tc},
                 {"C_minus1", lc.C_minus1},
                 {"C_0", lc.C_0},
                 {"composed", lc.composed},
                 {"C_Theta", fc.C_Theta},
                 {"K_Theta", fc.K_Theta},
                 {"xi", fc.xi},
                 {"c2", fc.c2},
                 {"c4", fc.c4}};
  emit_report(rep, out);
  return 0;
}

int cmd_flow(const RunConfig& rc, const std::string& out) {
  const rg::FlowChain ch = rg::solve_chain(rc.model, rc.n_scales);
  json rep{{"model", model_echo(rc)},
           {"n_scales", rc.n_scales},
           {"chain", chain_json(ch)},
           {"E_ground", rg::ground_energy_of_chain(ch)}};
  if (rc.model.p == 0.0) {
    const rg::MassResult mr = rg::renormalized_mass_from_chain(ch);
    rep["mass"] = json{{"m_star", mr.m_star},
                       {"sum_dg1", mr.sum_dg1},
                       {"sum_dg2w", mr.sum_dg2w},
                       {"zeta_star", mr.zeta_star}};
  }
  emit_report(rep, out);
  return 0;
}

int cmd_sumrules(const RunConfig& rc, const std::string& out) {
  const rg::FlowChain ch = rg::solve_chain(rc.model, rc.n_scales);
  json rows = json::array();
  for (const auto& f : ch.fam) {
    const rg::SumRuleReport sr = rg::soft_sum_rule(f);
    rows.push_back(json{{"scale", f.scale},
                        {"mu_hat", sr.mu_hat},
                        {"residual_sup", sr.residual_sup},
                        {"rhs_scale", sr.rhs_scale}});
  }
  const json rep{{"model", model_echo(rc)},
                 {"n_scales", rc.n_scales},
                 {"sum_rules", rows},
                 {"budget", budget_json(ch.budget)}};
  emit_report(rep, out);
  return 0;
}

int cmd_oracle(const RunConfig& rc, const std::string& out) {
  const rg::FormFactor ff = rc.model.form_factor();
  const rg::Rule1D radial = rg::gauss_legendre(rc.oracle_radial, 0.0, 1.0);
  const rg::AngularRule ang =
      rg::sphere_product(rc.oracle_ncos, rc.oracle_nphi);
  const rg::DiscreteModes m = rg::DiscreteModes::build(radial, ang, ff);
  const rg::FockBasis b = rg::FockBasis::build(m.count(), rc.oracle_nmax);
  const Eigen::Vector3d phat(0, 0, 1);

  const auto e0 = [&](double p) {
    const rg::SpMat H =
        rg::build_physical_direct(m, b, rc.model.g, p, phat);
    return rg::lanczos_smallest(H);
  };
  const double E0 = e0(rc.model.p);
  // Central second difference in |p| for the effective mass.
  const double dp = 0.05;
  const double Ep = e0(rc.model.p + dp);
  const double Em = e0(std::abs(rc.model.p - dp));
  const double inv_mass = (Ep - 2.0 * E0 + Em) / (dp * dp);

  const json rep{{"model", model_echo(rc)},
                 {"oracle",
                  json{{"radial", rc.oracle_radial},
                       {"n_cos", rc.oracle_ncos},
                       {"n_phi", rc.oracle_nphi},
                       {"nmax", rc.oracle_nmax},
                       {"modes", m.count()},
                       {"dim", b.dim()},
                       {"a2_sum", m.a2_sum()}}},
                 {"E0", E0},
                 {"inv_mass_fd", inv_mass},
                 {"fd_step", dp}};
  emit_report(rep, out);
  return 0;
}

int cmd_accept(const std::string& only, std::uint64_t seed,
               const std::string& out) {
  json rows = json::array();
  int fails = 0;
  const auto log = [&](const rg::CriterionResult& r) {
    std::printf("%s %s  %s  [%.1fs]\n", r.id.c_str(),
                r.pass ? "PASS" : "FAIL", r.detail.c_str(), r.seconds);
    std::fflush(stdout);
  };
  const auto results = rg::run_criteria(only, seed, log);
  for (const auto& r : results) {
    rows.push_back(json{{"id", r.id},
                        {"title", r.title},
                        {"pass", r.pass},
                        {"detail", r.detail}});
    if (!r.pass) ++fails;
  }
  if (!out.empty()) {
    emit_report(json{{"seed", seed}, {"criteria", rows}}, out);
  }
  return fails;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-theoretic RG flow driver"};
  app.require_subcommand(1);

  std::string config_path, out_path, only;
  std::uint64_t seed = 12345;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_path, "report output path (default stdout)");
  app.add_option("--seed", seed, "seed for randomized checks");

  auto* c_const = app.add_subcommand("constants", "leading-order constants");
  auto* c_flow = app.add_subcommand("flow", "run the kernel flow");
  auto* c_sum = app.add_subcommand("sumrules", "soft sum rule per scale");
  auto* c_oracle = app.add_subcommand("oracle", "truncated Fock diagonalization");
  auto* c_accept = app.add_subcommand("accept", "acceptance criteria");
  c_accept->add_option("--only", only, "run a single criterion (e.g. A3)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto t0 = std::chrono::steady_clock::now();
    int rcode = 0;
    if (c_accept->parsed()) {
      rcode = cmd_accept(only, seed, out_path);
    } else {
      const RunConfig rc = load_config(config_path);
      if (c_const->parsed()) rcode = cmd_constants(rc, out_path);
      if (c_flow->parsed()) rcode = cmd_flow(rc, out_path);
      if (c_sum->parsed()) rcode = cmd_sumrules(rc, out_path);
      if (c_oracle->parsed()) rcode = cmd_oracle(rc, out_path);
    }
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    std::fprintf(stderr, "done in %.2fs\n", dt.count());
    return rcode;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 64;
  }
}
