#include <memory>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include <fdcluster/basis.hpp>
#include <fdcluster/curves.hpp>
#include <fdcluster/funclust.hpp>
#include <fdcluster/mvclust.hpp>
#include <fdcluster/wavelet.hpp>

using namespace fdc;

namespace {

CurveSet make_curves(int n, int m) {
    SyntheticConfig cfg;
    cfg.n_per_cluster = n / 3;
    cfg.templates = {{0.0, 0.0, 0.0}, {0.25, 12.0, 0.2}, {0.5, 24.0, 0.4}};
    cfg.noise_sd = 0.02;
    cfg.m = m;
    cfg.t_end = m - 1.0;
    cfg.seed = 11;
    return generate_synthetic(cfg).curves;
}

Eigen::MatrixXd make_points(int n, int p) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = g(rng);
    for (int i = n / 2; i < n; ++i) X.row(i).array() += 4.0;
    return X;
}

}  // namespace

static void BM_SmoothCurveset(benchmark::State& state) {
    const CurveSet cs = make_curves(90, static_cast<int>(state.range(0)));
    const auto basis = std::make_shared<BSplineBasis>(
        cs.grid.front(), cs.grid.back(), 12);
    SmoothingSpec spec;
    for (auto _ : state) {
        benchmark::DoNotOptimize(smooth_curveset(cs, basis, spec));
    }
}
BENCHMARK(BM_SmoothCurveset)->Arg(64)->Arg(238);

static void BM_SmoothGcv(benchmark::State& state) {
    const CurveSet cs = make_curves(30, static_cast<int>(state.range(0)));
    const auto basis = std::make_shared<BSplineBasis>(
        cs.grid.front(), cs.grid.back(), 12);
    SmoothingSpec spec;
    spec.gcv = true;
    for (auto _ : state) {
        benchmark::DoNotOptimize(smooth_curveset(cs, basis, spec));
    }
}
BENCHMARK(BM_SmoothGcv)->Arg(238);

static void BM_Kmeans(benchmark::State& state) {
    const Eigen::MatrixXd X = make_points(static_cast<int>(state.range(0)), 12);
    KmeansOptions opts;
    opts.restarts = 10;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmeans(X, 3, opts));
    }
}
BENCHMARK(BM_Kmeans)->Arg(90)->Arg(600);

static void BM_DistanceMatrix(benchmark::State& state) {
    const CurveSet cs = make_curves(static_cast<int>(state.range(0)), 120);
    const auto basis = std::make_shared<BSplineBasis>(
        cs.grid.front(), cs.grid.back(), 12);
    const CoefficientSet coeffs = smooth_curveset(cs, basis, {});
    for (auto _ : state) {
        benchmark::DoNotOptimize(distance_matrix(coeffs, 0));
    }
}
BENCHMARK(BM_DistanceMatrix)->Arg(90)->Arg(300);

static void BM_HaarDwt(benchmark::State& state) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(state.range(0)));
    for (double& x : v) x = g(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(haar_dwt(v));
    }
}
BENCHMARK(BM_HaarDwt)->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
