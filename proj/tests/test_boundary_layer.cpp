#include "junction/boundary_layer.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace junction;

namespace {

// Two-point BVP oracle: u'' + lam u' = rhs(xi) on [0, L], u(0) = u0,
// u(L) = 0, second-order central differences, Thomas solve. Independent of
// the polynomial representation.
std::vector<double> bvp_solve(double lam, const std::function<double(double)>& rhs, double u0,
                              double L, int n, std::vector<double>* grid) {
  double h = L / n;
  std::vector<double> a(n - 1), b(n - 1), c(n - 1), r(n - 1);
  for (int i = 1; i < n; ++i) {
    double xi = i * h;
    a[i - 1] = 1.0 / (h * h) - lam / (2 * h);
    b[i - 1] = -2.0 / (h * h);
    c[i - 1] = 1.0 / (h * h) + lam / (2 * h);
    r[i - 1] = rhs(xi);
  }
  r[0] -= a[0] * u0;
  std::vector<double> cp(n - 1), dp(n - 1), u(n + 1, 0.0);
  cp[0] = c[0] / b[0];
  dp[0] = r[0] / b[0];
  for (int i = 1; i < n - 1; ++i) {
    double m = b[i] - a[i] * cp[i - 1];
    cp[i] = c[i] / m;
    dp[i] = (r[i] - a[i] * dp[i - 1]) / m;
  }
  u[n - 1] = dp[n - 2];
  for (int i = n - 3; i >= 0; --i) u[i + 1] = dp[i] - cp[i] * u[i + 2];
  u[0] = u0;
  if (grid) {
    grid->resize(n + 1);
    for (int i = 0; i <= n; ++i) (*grid)[i] = i * h;
  }
  return u;
}

TimeFn expr_fn(const char* src) { return TimeFn::from_expr(ExprFn::parse(src, {"t"})); }

double SmoothVal(double t) {
  ExprFn s = ExprFn::parse("sstep(t,0.05,0.4)", {"t"});
  return s.eval({t});
}

}  // namespace

TEST_CASE("Pi0 is the pure exponential") {
  auto pi0 = build_Pi0(expr_fn("1"), 2.0, 1.0);
  CHECK(pi0.lambda() == doctest::Approx(2.0));
  CHECK(pi0.value(0.0, 0.3) == doctest::Approx(1.0));
  CHECK(pi0.value(1.0, 0.3) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));

  auto z = build_Pi0(expr_fn("0"), 2.0, 1.0);
  CHECK(z.value(0.7, 0.1) == 0.0);

  auto r = build_Pi0(expr_fn("1"), 1.0, 2.0);
  CHECK(r.lambda() == doctest::Approx(0.5));

  CHECK_THROWS(build_Pi0(expr_fn("1"), -1.0, 1.0));
  CHECK_THROWS(build_Pi0(expr_fn("1"), 1.0, 0.0));
}

TEST_CASE("Pi1 matches the closed form with the ODE-consistent sign") {
  const double v = 2.0, a = 1.0, lam = v / a;
  auto Phi0 = expr_fn("t^2*sstep(t,0.0,0.4)");
  auto Phi1 = expr_fn("0.3*t^3*sstep(t,0.0,0.4)");
  auto pi0 = build_Pi0(Phi0, v, a);
  auto pi1 = recurse_Pi(pi0, Phi1);
  CHECK(pi1.degree() == 1);

  ExprFn phi0e = ExprFn::parse("t^2*sstep(t,0.0,0.4)", {"t"});
  ExprFn phi0d = phi0e.derivative("t");
  ExprFn phi1e = ExprFn::parse("0.3*t^3*sstep(t,0.0,0.4)", {"t"});
  for (double t : {0.1, 0.25, 0.37}) {
    for (double xi : {0.0, 0.5, 1.3, 4.0}) {
      double expect =
          (phi1e.eval({t}) - phi0d.eval({t}) * xi / (lam * a)) * std::exp(-lam * xi);
      CHECK(pi1.value(xi, t) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("degree does not grow in value when the source is static") {
  auto pi0 = build_Pi0(expr_fn("1"), 2.0, 1.0);  // Phi0 constant: dPhi0/dt = 0
  auto pi1 = recurse_Pi(pi0, expr_fn("t^2"));
  for (double xi : {0.2, 1.0, 3.0}) {
    for (double t : {0.1, 0.8}) {
      CHECK(pi1.value(xi, t) ==
            doctest::Approx(t * t * std::exp(-2.0 * xi)).epsilon(1e-13));
    }
  }
}

TEST_CASE("Pi1 and Pi2 match the finite-difference BVP oracle") {
  const double v = 2.0, a = 1.3, lam = v / a;
  auto Phi0 = expr_fn("t^2*sstep(t,0.0,0.5)");
  auto Phi1 = expr_fn("0.4*t^3*sstep(t,0.0,0.5)");
  auto Phi2 = expr_fn("-0.2*t^2*sstep(t,0.0,0.5)");
  auto pi0 = build_Pi0(Phi0, v, a);
  auto pi1 = recurse_Pi(pi0, Phi1);
  auto pi2 = recurse_Pi(pi1, Phi2);
  CHECK(pi2.degree() == 2);

  const double L = 30.0;
  const int n = 200000;
  for (double t : {0.2, 0.45}) {
    std::vector<double> grid;
    auto u1 = bvp_solve(lam, [&](double xi) { return pi0.dt(xi, t) / a; },
                        pi1.value(0.0, t), L, n, &grid);
    double sup1 = 0.0;
    for (std::size_t i = 0; i < grid.size(); i += 37)
      sup1 = std::max(sup1, std::abs(u1[i] - pi1.value(grid[i], t)));
    CHECK(sup1 <= 1e-8);

    auto u2 = bvp_solve(lam, [&](double xi) { return pi1.dt(xi, t) / a; },
                        pi2.value(0.0, t), L, n, nullptr);
    double sup2 = 0.0;
    for (std::size_t i = 0; i < grid.size(); i += 37)
      sup2 = std::max(sup2, std::abs(u2[i] - pi2.value(grid[i], t)));
    CHECK(sup2 <= 1e-8);
  }
}

TEST_CASE("ODE residual of the polynomial representation vanishes") {
  const double v = 1.7, a = 0.9;
  auto pi0 = build_Pi0(expr_fn("sin(t)*t^2"), v, a);
  auto pi1 = recurse_Pi(pi0, expr_fn("cos(t)*t^3"));
  auto pi2 = recurse_Pi(pi1, expr_fn("t^4"));
  for (double t : {0.3, 0.9, 1.4}) {
    for (double xi : {0.1, 0.7, 2.5, 8.0}) {
      CHECK(std::abs(pi0.ode_residual(xi, t, nullptr)) <= 1e-12);
      CHECK(std::abs(pi1.ode_residual(xi, t, &pi0)) <= 1e-12);
      CHECK(std::abs(pi2.ode_residual(xi, t, &pi1)) <= 1e-12);
    }
  }
}

TEST_CASE("base value, uniform decay, and flat start") {
  const double v = 2.0, a = 1.0;
  auto Phi0 = expr_fn("t^2*sstep(t,0.05,0.4)");
  auto Phi1 = expr_fn("t^3*sstep(t,0.05,0.4)");
  auto pi0 = build_Pi0(Phi0, v, a);
  auto pi1 = recurse_Pi(pi0, Phi1);

  // Pi_k(0, t) = Phi_k(t).
  for (double t : {0.1, 0.3, 0.6}) {
    CHECK(pi0.value(0.0, t) == doctest::Approx(t * t * SmoothVal(t)).epsilon(1e-13));
    CHECK(pi1.value(0.0, t) == doctest::Approx(t * t * t * SmoothVal(t)).epsilon(1e-13));
  }

  // Exponential domination far out.
  CHECK(std::abs(pi1.value(40.0, 0.5)) <= 1e-8);

  // Everything vanishes at t = 0 when the data are flat there.
  for (double xi : {0.0, 0.4, 2.0}) {
    CHECK(pi0.value(xi, 0.0) == 0.0);
    CHECK(pi1.value(xi, 0.0) == 0.0);
    CHECK(pi1.dt(xi, 0.0) == 0.0);
  }
}
