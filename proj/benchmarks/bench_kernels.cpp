// bench_kernels.cpp — Hot paths of the sweep and quadrature layers.

#include <benchmark/benchmark.h>

#include "zeno/charfunc.hpp"
#include "zeno/fock.hpp"
#include "zeno/spectral.hpp"

namespace {

using zeno::detector::DetectorParams;

DetectorParams canonical_detector() {
    return DetectorParams::from_nbar(0.2, 6.0, 2.0, 1.0);
}

zeno::sys::MeasuredSystemSpec two_level(double lambda) {
    zeno::sys::MeasuredSystemSpec spec;
    spec.levels = {{0, 1.0}, {1, -1.0}};
    spec.v_elements = {{{0, ""}, {1, ""}, {1.0, 0.0}}};
    spec.lambda = lambda;
    return spec;
}

void BM_ChiTwoTime(benchmark::State& state) {
    const auto det = canonical_detector();
    double t2 = 0.0;
    for (auto _ : state) {
        t2 += 1e-6;
        benchmark::DoNotOptimize(
            zeno::spectral::chi_two_time(1.0, -1.0, 1.0, 0.4 + t2, 5.0, det, 2.0));
    }
}
BENCHMARK(BM_ChiTwoTime);

void BM_JumpGeneral(benchmark::State& state) {
    const auto det = canonical_detector();
    const auto spec = two_level(5.0);
    zeno::spectral::QuadratureControls q;
    q.rel_tol = 1e-6;
    for (auto _ : state) {
        benchmark::DoNotOptimize(zeno::spectral::jump_probability_general(
            spec, det, {0, ""}, {1, ""}, 0.5, q));
    }
}
BENCHMARK(BM_JumpGeneral)->Unit(benchmark::kMillisecond);

void BM_LineShapeAuto(benchmark::State& state) {
    const auto det = DetectorParams::from_nbar(0.2, 16.0, 4.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            zeno::spectral::auto_line_shape(1.0, -1.0, det, 5.0, 0.5));
    }
}
BENCHMARK(BM_LineShapeAuto)->Unit(benchmark::kMillisecond);

void BM_LindbladRhs(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const auto det = canonical_detector();
    const auto spec = zeno::fock::LindbladSpec::detector_only(det, dim);
    const auto rho = zeno::fock::thermal_state(1.0, dim);
    for (auto _ : state) {
        benchmark::DoNotOptimize(zeno::fock::lindblad_rhs(rho, spec));
    }
}
BENCHMARK(BM_LindbladRhs)->Arg(32)->Arg(64)->Arg(128);

void BM_Propagate(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const auto det = canonical_detector();
    const auto spec = zeno::fock::LindbladSpec::detector_only(det, dim);
    auto rho = zeno::fock::thermal_state(2.9, dim);
    zeno::fock::IntegratorControls controls;
    for (auto _ : state) {
        benchmark::DoNotOptimize(zeno::fock::propagate(rho, spec, 0.5, controls));
    }
}
BENCHMARK(BM_Propagate)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
