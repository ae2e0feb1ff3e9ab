#include "junction/characteristics.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace junction;

namespace {

// First-order upwind oracle for U_t + Lambda(y) U_y = Psi, U(0,t)=q(t),
// U(y,0)=0; test-only, independent of the characteristic representation.
std::vector<double> upwind_solve(const ScalarFn1& Lambda, const ScalarFn2& Psi,
                                 const ScalarFn1& q, double ell, double T, int cells,
                                 std::vector<double>* grid_out) {
  int n = cells + 1;
  double dy = ell / cells;
  std::vector<double> y(n), U(n, 0.0), Un(n);
  double lmax = 0.0;
  for (int j = 0; j < n; ++j) {
    y[j] = j * dy;
    lmax = std::max(lmax, Lambda(y[j]));
  }
  double dt = 0.9 * dy / lmax;
  int steps = static_cast<int>(std::ceil(T / dt));
  dt = T / steps;
  double t = 0.0;
  for (int s = 0; s < steps; ++s) {
    Un[0] = q(t + dt);
    for (int j = 1; j < n; ++j)
      Un[j] = U[j] - dt / dy * Lambda(y[j]) * (U[j] - U[j - 1]) + dt * Psi(y[j], t);
    U.swap(Un);
    t += dt;
  }
  if (grid_out) *grid_out = y;
  return U;
}

}  // namespace

TEST_CASE("characteristic tables: identity, closed form, constant speed") {
  auto m1 = build_characteristic([](double) { return 1.0; }, 1.0, 256);
  CHECK(m1.V(0.0) == doctest::Approx(0.0));
  CHECK(m1.V(0.7) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(m1.V_inv(0.55) == doctest::Approx(0.55).epsilon(1e-10));

  auto m2 = build_characteristic([](double y) { return 1.0 + y; }, 1.0, 256);
  CHECK(m2.V(0.5) == doctest::Approx(std::log(1.5)).epsilon(1e-12));

  auto m3 = build_characteristic([](double) { return 2.0; }, 1.0, 256);
  CHECK(m3.V(1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("V_inv inverts V on grid points") {
  auto m = build_characteristic([](double y) { return 1.0 + std::sin(y) * 0.3; }, 2.0, 512);
  for (int i = 0; i <= 32; ++i) {
    double y = 2.0 * i / 32.0;
    CHECK(m.V_inv(m.V(y)) == doctest::Approx(y).epsilon(1e-10));
  }
}

TEST_CASE("nonpositive speed rejected") {
  CHECK_THROWS(build_characteristic([](double y) { return 0.5 - y; }, 1.0, 64));
}

TEST_CASE("pure transport of boundary data") {
  auto sol = solve_model([](double) { return 1.0; }, [](double, double) { return 0.0; },
                         [](double t) { return t * t; }, 1.0, 2.0, 256);
  for (double y : {0.1, 0.4, 0.8}) {
    for (double t : {0.05, 0.3, 0.9, 1.7}) {
      double expect = (t >= y) ? (t - y) * (t - y) : 0.0;
      CHECK(sol.eval(y, t) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("constant source fills both regions as t and y") {
  auto sol = solve_model([](double) { return 1.0; }, [](double, double) { return 1.0; },
                         [](double) { return 0.0; }, 1.0, 2.0, 256);
  CHECK(sol.eval(0.5, 0.2) == doctest::Approx(0.2).epsilon(1e-10));  // D1: U = t
  CHECK(sol.eval(0.5, 1.5) == doctest::Approx(0.5).epsilon(1e-10));  // D2: U = y
}

TEST_CASE("variable speed: closed form (t - log(1+y))^2") {
  auto lam = [](double y) { return 1.0 + y; };
  auto q = [](double t) { return t * t; };
  auto zero2 = [](double, double) { return 0.0; };
  auto sol = solve_model(lam, zero2, q, 1.0, 1.5, 512);
  for (double y : {0.15, 0.45, 0.85}) {
    for (double t : {0.2, 0.7, 1.3}) {
      double vy = std::log(1.0 + y);
      double expect = (t > vy) ? (t - vy) * (t - vy) : 0.0;
      CHECK(sol.eval(y, t) == doctest::Approx(expect).epsilon(5e-9).scale(1.0));
    }
  }
}

TEST_CASE("matching-condition residuals") {
  auto rep1 = check_matching([](double, double) { return 0.0; },
                             [](double t) { return t * t; }, 1);
  CHECK(rep1.q0 == doctest::Approx(0.0));
  CHECK(rep1.q1 == doctest::Approx(0.0).epsilon(1e-12));

  auto rep2 = check_matching([](double, double) { return 0.0; },
                             [](double t) { return t; }, 1);
  CHECK(rep2.q1 == doctest::Approx(1.0).epsilon(1e-9));

  auto rep3 = check_matching([](double, double) { return 1.0; },
                             [](double t) { return std::sin(t); }, 1);
  CHECK(rep3.q1 == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("interior PDE residual via finite differences") {
  auto lam = [](double y) { return 1.0 + 0.5 * y; };
  auto psi = [](double y, double t) { return std::sin(2.0 * y) * t * t; };
  auto q = [](double t) { return t * t * t; };
  auto sol = solve_model(lam, psi, q, 1.0, 1.5, 512);
  double h = 5e-4;
  for (double y : {0.3, 0.6}) {
    for (double t : {0.45, 1.2}) {
      bool up = sol.in_upstream_region(y, t);
      // Stay inside one region for the stencil.
      if (std::abs(t - sol.characteristic().V(y)) < 4 * h) continue;
      double ut = (sol.eval(y, t + h) - sol.eval(y, t - h)) / (2 * h);
      double uy = (sol.eval(y + h, t) - sol.eval(y - h, t)) / (2 * h);
      double res = ut + lam(y) * uy - psi(y, t);
      INFO("y=", y, " t=", t, " upstream=", up);
      CHECK(std::abs(res) < 1e-6);
    }
  }
}

TEST_CASE("solution is affine in (Psi, q) jointly") {
  auto lam = [](double y) { return 1.0 + y * y; };
  auto psi1 = [](double y, double t) { return std::cos(y) * t; };
  auto psi2 = [](double y, double t) { return y + 0.3 * t * t; };
  auto q1 = [](double t) { return t * t; };
  auto q2 = [](double t) { return std::sin(t) * t; };
  double a = 1.7, b = -0.6;
  auto psiC = [&](double y, double t) { return a * psi1(y, t) + b * psi2(y, t); };
  auto qC = [&](double t) { return a * q1(t) + b * q2(t); };
  auto s1 = solve_model(lam, psi1, q1, 1.0, 1.2, 256);
  auto s2 = solve_model(lam, psi2, q2, 1.0, 1.2, 256);
  auto sC = solve_model(lam, psiC, qC, 1.0, 1.2, 256);
  for (double y : {0.2, 0.5, 0.9}) {
    for (double t : {0.15, 0.6, 1.1}) {
      CHECK(sC.eval(y, t) ==
            doctest::Approx(a * s1.eval(y, t) + b * s2.eval(y, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("finite speed: zero upstream of the characteristic with zero source") {
  auto sol = solve_model([](double y) { return 1.0 + y; }, [](double, double) { return 0.0; },
                         [](double t) { return t * t; }, 1.0, 1.5, 256);
  for (double y : {0.3, 0.7, 0.95}) {
    double vy = sol.characteristic().V(y);
    CHECK(sol.eval(y, 0.5 * vy) == 0.0);
  }
}

TEST_CASE("acceptance oracle: three reductions vs 4000-cell upwind") {
  struct Case {
    ScalarFn1 lam;
    ScalarFn2 psi;
    ScalarFn1 q;
  };
  std::vector<Case> cases;
  cases.push_back({[](double) { return 1.0; }, [](double, double) { return 0.0; },
                   [](double t) { return t * t; }});
  cases.push_back({[](double) { return 1.0; }, [](double, double) { return 1.0; },
                   [](double) { return 0.0; }});
  cases.push_back({[](double y) { return 1.0 + y; }, [](double, double) { return 0.0; },
                   [](double t) { return t * t; }});
  const double T = 1.0, ell = 1.0;
  for (const auto& c : cases) {
    auto sol = solve_model(c.lam, c.psi, c.q, ell, T, 1024);
    std::vector<double> grid;
    auto U = upwind_solve(c.lam, c.psi, c.q, ell, T, 4000, &grid);
    double linf = 0.0;
    for (std::size_t j = 0; j < grid.size(); j += 7)
      linf = std::max(linf, std::abs(U[j] - sol.eval(grid[j], T)));
    CHECK(linf <= 2e-3);
  }
}
