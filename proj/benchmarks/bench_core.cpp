#include <benchmark/benchmark.h>

#include "junction/characteristics.hpp"
#include "junction/disk_cell.hpp"
#include "junction/expr.hpp"

using namespace junction;

static void BM_ExprEval(benchmark::State& state) {
  auto f = ExprFn::parse("0.3*(1+xi1/0.2)*sstep(x,0.65,0.78)*(1-sstep(x,0.78,0.9))*sin(t)",
                         {"xi1", "xi2", "x", "t"});
  double x = 0.7, t = 0.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.eval({0.1, -0.05, x, t}));
    x += 1e-9;
  }
}
BENCHMARK(BM_ExprEval);

static void BM_ExprDerivativeEval(benchmark::State& state) {
  auto f = ExprFn::parse("exp(-x^2)*sin(3*t)*sstep(x,0.2,0.8)", {"x", "t"});
  auto fxx = f.derivative("x", 2);
  double x = 0.4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fxx.eval({x, 0.3}));
    x += 1e-9;
  }
}
BENCHMARK(BM_ExprDerivativeEval);

static void BM_CharacteristicEval(benchmark::State& state) {
  auto sol = solve_model([](double y) { return 1.0 + 0.3 * y; },
                         [](double y, double t) { return std::sin(2 * y) * t; },
                         [](double t) { return t * t; }, 1.0, 1.0, 512);
  double y = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sol.eval(y, 0.7));
    y = (y > 0.9) ? 0.1 : y + 1e-6;
  }
}
BENCHMARK(BM_CharacteristicEval);

static void BM_DiskSolve(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  DiskSolver solver(0.2, n, 2 * n, [](double, double) { return 1.0; },
                    [](double, double) { return 0.0; }, [](double, double) { return 1.0; });
  for (auto _ : state) {
    Eigen::VectorXd u = solver.solve([](double, double) { return -2.0; },
                                     [](double) { return -0.2; });
    benchmark::DoNotOptimize(u);
  }
}
BENCHMARK(BM_DiskSolve)->Arg(8)->Arg(16)->Arg(32);

static void BM_DiskFactorization(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    DiskSolver solver(0.2, n, 2 * n, [](double, double) { return 1.0; },
                      [](double, double) { return 0.0; },
                      [](double, double) { return 1.0; });
    benchmark::DoNotOptimize(solver.n_dof());
  }
}
BENCHMARK(BM_DiskFactorization)->Arg(8)->Arg(16)->Arg(32);

BENCHMARK_MAIN();
