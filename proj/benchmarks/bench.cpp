// Microbenchmarks for the numerically heavy paths: kernel quadratures,
// ball-family scans, rearrangement norms, polynomial projection and one
// end-to-end verification core.  Sizes are chosen so a full run finishes in
// well under a minute on one core while still exercising the asymptotic
// regime of each algorithm.

#include <benchmark/benchmark.h>

#include "mlab/experiments.hpp"
#include "mlab/norms.hpp"
#include "mlab/operators.hpp"
#include "mlab/polyproj.hpp"
#include "mlab/weights.hpp"

namespace {

using namespace mlab;

const FunctionSpec kBump = Bump{0.4, {0.0, 0.0, 0.0}};

void bm_riesz_at_1d(benchmark::State& state) {
    const Grid g = make_grid(1, 1.0, 8192);
    const GridFunction f = sample(kBump, g);
    const KernelQuadrature quad{0.5, 4};
    for (auto _ : state)
        benchmark::DoNotOptimize(riesz_at(f, quad, {0.1, 0.0, 0.0}));
}
BENCHMARK(bm_riesz_at_1d)->Unit(benchmark::kMicrosecond);

void bm_riesz_field_2d(benchmark::State& state) {
    const Grid g = make_grid(2, 1.0, 48);
    const GridFunction f = sample(kBump, g);
    const KernelQuadrature quad{1.0, 4};
    for (auto _ : state)
        benchmark::DoNotOptimize(riesz(f, quad));
}
BENCHMARK(bm_riesz_field_2d)->Unit(benchmark::kMillisecond);

void bm_gagliardo_1d(benchmark::State& state) {
    const Grid g = make_grid(1, 1.0, 2048);
    const Ball ball{{0.0, 0.0, 0.0}, 0.5, Metric::euclidean};
    const FunctionSpec f = Polynomial{{Polynomial::Term{{1, 0, 0}, 1.0}}};
    for (auto _ : state)
        benchmark::DoNotOptimize(gagliardo(f, 1.0, 0.5, ball, g, 4));
}
BENCHMARK(bm_gagliardo_1d)->Unit(benchmark::kMillisecond);

void bm_gagliardo_2d(benchmark::State& state) {
    const Grid g = make_grid(2, 1.0, 48);
    const Ball ball{{0.0, 0.0, 0.0}, 0.8, Metric::euclidean};
    for (auto _ : state)
        benchmark::DoNotOptimize(gagliardo(kBump, 2.0, 0.5, ball, g, 4));
}
BENCHMARK(bm_gagliardo_2d)->Unit(benchmark::kMillisecond);

void bm_a1_constant_2d(benchmark::State& state) {
    const Grid g = make_grid(2, 1.0, static_cast<int>(state.range(0)));
    const BallFamily fam = coverage_family(g, 2, 0.0, Metric::euclidean);
    const GridFunction w = discretize(power_weight(2, 1.0), g);
    for (auto _ : state)
        benchmark::DoNotOptimize(a1_constant(w, fam));
    state.SetLabel(std::to_string(fam.balls.size()) + " balls");
}
BENCHMARK(bm_a1_constant_2d)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void bm_maximal_2d(benchmark::State& state) {
    const Grid g = make_grid(2, 1.0, 128);
    const BallFamily fam = coverage_family(g, 2, 0.0, Metric::euclidean);
    const GridFunction f = sample(kBump, g);
    for (auto _ : state)
        benchmark::DoNotOptimize(maximal(f, fam));
}
BENCHMARK(bm_maximal_2d)->Unit(benchmark::kMillisecond);

void bm_lorentz_1d(benchmark::State& state) {
    const Grid g = make_grid(1, 1.0, 8192);
    const Ball ball{{0.0, 0.0, 0.0}, 0.8, Metric::euclidean};
    const GridFunction f = sample(kBump, g);
    const GridFunction w = discretize(power_weight(1, 0.5), g);
    for (auto _ : state)
        benchmark::DoNotOptimize(lorentz(f, 2.0, 1.0, ball, w));
}
BENCHMARK(bm_lorentz_1d)->Unit(benchmark::kMicrosecond);

void bm_best_approx_2d(benchmark::State& state) {
    const Grid g = make_grid(2, 1.0, 128);
    const Ball ball{{0.0, 0.0, 0.0}, 0.8, Metric::euclidean};
    const GridFunction f = sample(kBump, g);
    for (auto _ : state)
        benchmark::DoNotOptimize(best_approx_error(f, ball, 3, 2.0, g));
}
BENCHMARK(bm_best_approx_2d)->Unit(benchmark::kMillisecond);

void bm_poincare_check_2d(benchmark::State& state) {
    const Grid g = make_grid(2, 1.0, 64);
    const Ball ball{{0.0, 0.0, 0.0}, 0.8, Metric::euclidean};
    const Weight w = power_weight(2, 1.0);
    CheckOptions opt;
    opt.dilation_probe = false;
    opt.rep_probe = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(poincare_check(kBump, w, 1.0, 1.0, ball, g,
                                                PoincareMode::strong, opt));
}
BENCHMARK(bm_poincare_check_2d)->Unit(benchmark::kMillisecond);

}  // namespace
