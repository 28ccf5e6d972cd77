#include <benchmark/benchmark.h>

#include "rgflow/fockoracle.hpp"
#include "rgflow/initcond.hpp"
#include "rgflow/spectral.hpp"
#include "rgflow/wickflow.hpp"

namespace {

using namespace rg;

ModelParams bench_params() {
  ModelParams mp;
  mp.g = 0.05;
  mp.p = 0.2;
  mp.sigma = 0.05;
  mp.rho = 0.25;
  mp.profile = FormFactor::Profile::smooth;
  return mp;
}

void BM_Jet2Multiply(benchmark::State& state) {
  Jet2 a = Jet2::var(0.3, 0, 1.0);
  Jet2 b = Jet2::var(0.7, 2, 0.25);
  a = a * a + b;
  for (auto _ : state) {
    benchmark::DoNotOptimize(a * b);
  }
}
BENCHMARK(BM_Jet2Multiply);

void BM_KernelCollapse(benchmark::State& state) {
  const KernelFamily fam = initial_family(bench_params());
  const WickKernel& w11 = fam.at(1, 1);
  const std::array<double, 2> legs{0.312, 0.877};
  for (auto _ : state) {
    benchmark::DoNotOptimize(w11.collapse_at(legs));
  }
}
BENCHMARK(BM_KernelCollapse);

void BM_VacuumChannelValue(benchmark::State& state) {
  const KernelFamily fam = initial_family(bench_params());
  const FlowOptions opt = default_flow_options(fam);
  const EvalPoint at{};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        channel_value(fam, opt, 0, 0, {}, {}, at, nullptr, 2));
  }
}
BENCHMARK(BM_VacuumChannelValue);

void BM_VacuumChannelJet(benchmark::State& state) {
  const KernelFamily fam = initial_family(bench_params());
  const FlowOptions opt = default_flow_options(fam);
  const EvalPoint at{};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        channel_jet(fam, opt, 0, 0, {}, {}, at, nullptr, 2));
  }
}
BENCHMARK(BM_VacuumChannelJet);

void BM_OneLegChannelJet(benchmark::State& state) {
  const KernelFamily fam = initial_family(bench_params());
  const FlowOptions opt = default_flow_options(fam);
  const ExtLeg leg{0.31, Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0)};
  const EvalPoint at{};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        channel_jet(fam, opt, 1, 0, {&leg, 1}, {}, at, nullptr, 1));
  }
}
BENCHMARK(BM_OneLegChannelJet);

void BM_FirstDecimation(benchmark::State& state) {
  const KernelFamily fam = initial_family(bench_params());
  const FlowOptions opt = default_flow_options(fam);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rg_step(fam, opt));
  }
}
BENCHMARK(BM_FirstDecimation)->Unit(benchmark::kSecond);

void BM_OracleApply(benchmark::State& state) {
  const DiscreteModes m =
      DiscreteModes::build(gauss_legendre(static_cast<int>(state.range(0)),
                                          0.0, 1.0),
                           sphere_product(2, 4), bench_params().form_factor());
  const FockBasis b = FockBasis::build(m.count(), 2);
  const SpMat H = build_physical_direct(m, b, 0.05, 0.2, {0, 0, 1});
  Eigen::VectorXd v = Eigen::VectorXd::Random(b.dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize((H * v).eval());
  }
}
BENCHMARK(BM_OracleApply)->Arg(4)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
