#include <benchmark/benchmark.h>

#include <cmath>

#include "mfrelax/hodge.hpp"
#include "mfrelax/relax.hpp"

using namespace mfrelax;

namespace {

BoxMesh desk(bool periodic, int refine = 1) {
  return build_box_mesh({Interval{-4, 4}, Interval{-4, 4}, Interval{-10, 10}},
                        {4 * refine, 4 * refine, 10 * refine}, periodic);
}

void BM_BuildComplex(benchmark::State& state) {
  const BoxMesh m = desk(false, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_complex(m));
}
BENCHMARK(BM_BuildComplex)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Step(benchmark::State& state) {
  const auto scheme = static_cast<SchemeKind>(state.range(0));
  const DeRhamComplex c = build_complex(desk(false));
  const SchemeState s0 = make_initial_state(c, scheme, HopfParams{});
  StepperConfig cfg;
  cfg.dt = scheme == SchemeKind::sp ? 10.0 : 1.0;
  cfg.tau = 100.0;
  cfg.reference_norm = std::sqrt(energy(c, s0.B));
  const Stepper st(c, cfg);
  for (auto _ : state) {
    auto [s1, rep] = st.step(s0);
    state.counters["newton"] = rep.newton_iterations;
    benchmark::DoNotOptimize(s1.B.coeffs.data());
  }
  state.SetLabel(to_string(scheme));
}
BENCHMARK(BM_Step)
    ->Arg(static_cast<int>(SchemeKind::sp))
    ->Arg(static_cast<int>(SchemeKind::hdiv_noH))
    ->Arg(static_cast<int>(SchemeKind::hcurl))
    ->Arg(static_cast<int>(SchemeKind::h1))
    ->Unit(benchmark::kMillisecond);

void BM_HodgeDecompose(benchmark::State& state) {
  const DeRhamComplex c = build_complex(desk(state.range(0) != 0));
  const SchemeState s = make_initial_state(c, SchemeKind::sp, HopfParams{});
  const HodgeSolver h(c);
  for (auto _ : state) benchmark::DoNotOptimize(h.decompose(s.B).helicity);
}
BENCHMARK(BM_HodgeDecompose)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ArnoldConstant(benchmark::State& state) {
  const DeRhamComplex c = build_complex(desk(false));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_arnold_constant(c).lambda_min);
}
BENCHMARK(BM_ArnoldConstant)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
