#include <benchmark/benchmark.h>

#include <random>

#include "fopid/fracnum.hpp"
#include "fopid/lqr_fopid.hpp"
#include "fopid/matops.hpp"
#include "fopid/nsga2.hpp"
#include "fopid/simkit.hpp"

using namespace fopid;

namespace {

const lqr::NioptdPlant kPlant{1.0, 0.5, 2.0, 1.5};
const lqr::LqrDesignVars kVars{{0.643793, 0.02965, 0.062444}, 0.34342, 1.133782, 0.449655};

Eigen::MatrixXd random_matrix(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (auto& v : m.reshaped())
        v = g(rng);
    return m;
}

void BM_Expm(benchmark::State& state) {
    const Eigen::MatrixXd m = random_matrix(static_cast<int>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(matops::expm(m));
}
BENCHMARK(BM_Expm)->Arg(3)->Arg(6)->Arg(20);

void BM_SolveCare(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd a = random_matrix(n, 2);
    const Eigen::MatrixXd b = random_matrix(n, 3).leftCols(1);
    const matops::CareProblem prob{a, b, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(1, 1)};
    for (auto _ : state)
        benchmark::DoNotOptimize(matops::solve_care(prob));
}
BENCHMARK(BM_SolveCare)->Arg(3)->Arg(6);

void BM_DesignGains(benchmark::State& state) {
    const auto method = static_cast<lqr::DelayMethod>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(lqr::design_gains(kPlant, kVars, method));
}
BENCHMARK(BM_DesignGains)->Arg(static_cast<int>(lqr::DelayMethod::Cai))->Arg(static_cast<int>(lqr::DelayMethod::He));

void BM_ClosedLoop(benchmark::State& state) {
    sim::SimOptions opts;
    opts.method = state.range(0) ? sim::SimulationMethod::GrunwaldLetnikov : sim::SimulationMethod::Oustaloup;
    const auto controller = lqr::design_from_vars(kPlant, kVars, lqr::DelayMethod::He);
    for (auto _ : state)
        benchmark::DoNotOptimize(sim::simulate_closed_loop(kPlant, controller, sim::Scenario::objective(), opts));
}
BENCHMARK(BM_ClosedLoop)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GlDifferintegral(benchmark::State& state) {
    std::vector<double> f(static_cast<std::size_t>(state.range(0)));
    for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = 1e-3 * static_cast<double>(k);
    for (auto _ : state)
        benchmark::DoNotOptimize(fracnum::gl_differintegral(f, 0.5, 1e-3));
}
BENCHMARK(BM_GlDifferintegral)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_NondominatedSort(benchmark::State& state) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    moo::ObjectiveMatrix pts(static_cast<std::size_t>(state.range(0)));
    for (auto& p : pts)
        p = {u(rng), u(rng)};
    for (auto _ : state)
        benchmark::DoNotOptimize(moo::fast_nondominated_sort(pts));
}
BENCHMARK(BM_NondominatedSort)->Arg(80)->Arg(200);

} // namespace

BENCHMARK_MAIN();
