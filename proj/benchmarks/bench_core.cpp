#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "changediag/boundary.hpp"
#include "changediag/posterior.hpp"
#include "changediag/regions.hpp"
#include "changediag/solver.hpp"

using namespace cdiag;

namespace {

ProblemSpec example() {
    ProblemSpec s;
    s.alphabet_size = 4;
    s.num_types = 2;
    s.p0 = 0.02;
    s.p = 0.05;
    s.nu = {0.5, 0.5};
    s.densities = {{0.25, 0.25, 0.25, 0.25}, {0.4, 0.3, 0.2, 0.1}, {0.1, 0.2, 0.3, 0.4}};
    s.delay_cost = 1.0;
    s.terminal_costs = {{10, 10}, {0, 3}, {3, 0}};
    return s;
}

std::vector<std::vector<double>> random_points(std::size_t n) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(1.0);
    std::vector<std::vector<double>> pts(n, std::vector<double>(3));
    for (auto& p : pts) {
        double t = 0.0;
        for (auto& x : p) t += (x = e(rng));
        for (auto& x : p) x /= t;
    }
    return pts;
}

void BM_PosteriorUpdate(benchmark::State& state) {
    const auto s = example();
    std::vector<double> pi = initial_posterior(s).pi, next(3);
    std::size_t x = 0;
    for (auto _ : state) {
        update_into(s, pi, x, next);
        pi.swap(next);
        x = (x + 1) & 3;
        benchmark::DoNotOptimize(pi.data());
    }
}
BENCHMARK(BM_PosteriorUpdate);

void BM_BellmanSweep(benchmark::State& state) {
    const auto s = example();
    const auto grid = std::make_shared<const SimplexGrid>(2, static_cast<std::size_t>(state.range(0)));
    const BellmanOperator op(s, grid, 1);
    std::vector<double> in = op.stopping_costs(), out(in.size());
    for (auto _ : state) {
        op.apply(in, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.counters["nodes"] = static_cast<double>(grid->size());
}
BENCHMARK(BM_BellmanSweep)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Interpolate(benchmark::State& state) {
    const auto s = example();
    const auto table = value_iterate(s, std::make_shared<const SimplexGrid>(2, 200), {.tol = 1e-6, .threads = 1});
    const auto pts = random_points(1024);
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(interpolate(table, pts[k++ & 1023]));
    }
}
BENCHMARK(BM_Interpolate);

void BM_SplineMembership(benchmark::State& state) {
    const auto s = example();
    const auto table = value_iterate(s, std::make_shared<const SimplexGrid>(2, 200), {.tol = 1e-6, .threads = 1});
    const auto region = extract_region(s, table);
    const std::vector<SplineBoundary> b{fit_boundary(region, 1), fit_boundary(region, 2)};
    const auto pts = random_points(1024);
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fast_member(s, b, pts[k++ & 1023]));
    }
}
BENCHMARK(BM_SplineMembership);

void BM_SplineEval(benchmark::State& state) {
    std::vector<double> knots, coef;
    for (int i = 0; i <= 12; ++i) knots.push_back(i / 12.0);
    for (int i = 0; i < 15; ++i) coef.push_back(1.0 + 0.1 * i);
    const SplineBoundary g(1, knots, coef, 0.0, 0.0);
    double beta = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(g(beta));
        beta += 0.001;
        if (beta > 1.0) beta = 0.0;
    }
}
BENCHMARK(BM_SplineEval);

}  // namespace

BENCHMARK_MAIN();
