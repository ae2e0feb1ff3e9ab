// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// criteria pass. Criterion 3 may report INCONCLUSIVE (mesh error dominating
// the asymptotic gap), which does not fail the run.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <memory>
#include <vector>

#include "../configs.hpp"
#include "junction/boundary_layer.hpp"
#include "junction/characteristics.hpp"
#include "junction/composer.hpp"
#include "junction/disk_cell.hpp"
#include "junction/node_cell.hpp"
#include "junction/reference_solver.hpp"
#include "junction/studies.hpp"

using namespace junction;

namespace {

int g_failures = 0;
int g_inconclusive = 0;

void outcome(int id, bool pass, const std::string& detail, bool inconclusive = false) {
  if (inconclusive) {
    ++g_inconclusive;
    std::printf("CRITERION %d: INCONCLUSIVE (%s)\n", id, detail.c_str());
  } else if (pass) {
    std::printf("CRITERION %d: PASS (%s)\n", id, detail.c_str());
  } else {
    ++g_failures;
    std::printf("CRITERION %d: FAIL (%s)\n", id, detail.c_str());
  }
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::shared_ptr<const JunctionSpec> canonical_spec() {
  return std::make_shared<JunctionSpec>(load_spec(testcfg::kCanonicalConfig));
}

// Shared coefficient sets (built once).
std::shared_ptr<const CoefficientSet> g_coeffs1, g_coeffs2;

void criterion_1_residual_order() {
  auto spec = canonical_spec();
  g_coeffs1 = build_expansion(spec, 1);
  ResidualReport rep = residual_study(g_coeffs1, 1, {0.2, 0.1, 0.05, 0.025}, 220, 20260808);
  bool ok = rep.slope_interior >= 0.15 && rep.slope_boundary >= 2.0 - 0.15 &&
            !rep.interior_zero && !rep.boundary_zero;
  outcome(1, ok,
          fmt("interior slope %.3f (>= 0.15), boundary slope %.3f (>= 1.85)",
              rep.slope_interior, rep.slope_boundary));
}

void criterion_2_order_gap() {
  auto spec = canonical_spec();
  ResidualReport r1 = residual_study(g_coeffs1, 1, {0.2, 0.1, 0.05, 0.025}, 220, 20260808);
  g_coeffs2 = build_expansion(spec, 2);
  ResidualReport r2 = residual_study(g_coeffs2, 2, {0.2, 0.1, 0.05, 0.025}, 220, 20260808);
  double gap = r2.slope_interior - r1.slope_interior;
  bool ok = gap >= 0.8 && gap <= 1.2;
  outcome(2, ok, fmt("slope gap %.3f (1.0 +- 0.2; M1 %.3f, M2 %.3f)", gap, r1.slope_interior,
                     r2.slope_interior));
}

void criterion_3_sup_error() {
  ErrorReport rep = error_study(g_coeffs1, 1, {0.2, 0.1}, 20260808, 4, 320);
  double e1 = rep.rows[0].sup_error, e2 = rep.rows[1].sup_error;
  bool decreasing = e2 < e1;
  bool ok = decreasing && rep.order_fit >= 0.15;
  if (rep.inconclusive) {
    outcome(3, true,
            fmt("mesh error %.2e above half the gap |%.2e - %.2e|; order fit %.3f",
                std::max(rep.rows[0].mesh_error, rep.rows[1].mesh_error), e1, e2,
                rep.order_fit),
            true);
  } else {
    outcome(3, ok,
            fmt("sup error %.3e -> %.3e, order %.3f (>= 0.15 after mesh-error subtraction)",
                e1, e2, rep.order_fit));
  }
}

void criterion_4_kirchhoff_and_continuity() {
  // Kirchhoff residual on every solved limit problem of this suite.
  double worst = 0.0;
  for (double r : g_coeffs2->kirchhoff) worst = std::max(worst, r);
  auto node_spec = std::make_shared<JunctionSpec>(load_spec(testcfg::kNodeActiveConfig));
  auto node_coeffs = build_expansion(node_spec, 0);
  worst = std::max(worst, node_coeffs->kirchhoff[0]);

  // Continuity emergence with zero node flux in the one-inlet regime.
  auto cont_spec = std::make_shared<JunctionSpec>(load_spec(testcfg::kContinuityConfig));
  LimitSolution lim = solve_limit_problem(*cont_spec);
  double cont = 0.0;
  for (int i = 0; i <= 16; ++i) {
    double t = cont_spec->T * i / 16.0;
    double g = lim.w0[0].value(0.0, t);
    cont = std::max(cont, std::abs(lim.w0[1].value(0.0, t) - g));
    cont = std::max(cont, std::abs(lim.w0[2].value(0.0, t) - g));
  }
  bool ok = worst <= 1e-8 && cont <= 1e-8;
  outcome(4, ok, fmt("kirchhoff residual %.2e (<= 1e-8), trace agreement %.2e (<= 1e-8)",
                     worst, cont));
}

void criterion_5_characteristics_vs_upwind() {
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
  double worst = 0.0;
  for (const auto& c : cases) {
    auto sol = solve_model(c.lam, c.psi, c.q, ell, T, 1024);
    const int cells = 4000;
    double dy = ell / cells;
    std::vector<double> y(cells + 1), U(cells + 1, 0.0), Un(cells + 1);
    double lmax = 0.0;
    for (int j = 0; j <= cells; ++j) {
      y[static_cast<std::size_t>(j)] = j * dy;
      lmax = std::max(lmax, c.lam(y[static_cast<std::size_t>(j)]));
    }
    double dt = 0.9 * dy / lmax;
    int steps = static_cast<int>(std::ceil(T / dt));
    dt = T / steps;
    double t = 0.0;
    for (int s = 0; s < steps; ++s) {
      Un[0] = c.q(t + dt);
      for (int j = 1; j <= cells; ++j)
        Un[static_cast<std::size_t>(j)] =
            U[static_cast<std::size_t>(j)] -
            dt / dy * c.lam(y[static_cast<std::size_t>(j)]) *
                (U[static_cast<std::size_t>(j)] - U[static_cast<std::size_t>(j) - 1]) +
            dt * c.psi(y[static_cast<std::size_t>(j)], t);
      U.swap(Un);
      t += dt;
    }
    for (int j = 0; j <= cells; j += 5)
      worst = std::max(worst,
                       std::abs(U[static_cast<std::size_t>(j)] -
                                sol.eval(y[static_cast<std::size_t>(j)], T)));
  }
  outcome(5, worst <= 2e-3, fmt("three reductions vs 4000-cell upwind, Linf %.3e (<= 2e-3)",
                                worst));
}

void criterion_6_disk_analytic() {
  const double c = 1.0;
  DiskSolver solver(1.0, 32, 64, [](double, double) { return 1.0; },
                    [](double, double) { return 0.0; }, [](double, double) { return 1.0; });
  Eigen::VectorXd u = solver.solve([&](double, double) { return -2.0 * c; },
                                   [&](double) { return -c; });
  auto exact = [&](double r) { return -(c / 2.0) * (r * r - 0.5); };
  double l2 = 0.0, area = 0.0;
  for (int ir = 0; ir <= 50; ++ir)
    for (int ia = 0; ia < 40; ++ia) {
      double r = ir / 50.0, th = 2.0 * M_PI * ia / 40.0;
      double w = r + 1e-12;
      double d = solver.value(u, r, th) - exact(r);
      l2 += d * d * w;
      area += w;
    }
  l2 = std::sqrt(l2 / area * M_PI);
  double mean = std::abs(solver.mean(u));
  bool ok = l2 <= 1e-6 && mean <= 1e-9;
  outcome(6, ok, fmt("radial quadratic L2 %.3e (<= 1e-6), mean %.3e (<= 1e-9)", l2, mean));
}

void criterion_7_boundary_layer() {
  const double v = 2.0, a = 1.3, lam = v / a;
  auto Phi0 = TimeFn::from_expr(ExprFn::parse("t^2*sstep(t,0.0,0.5)", {"t"}));
  auto Phi1 = TimeFn::from_expr(ExprFn::parse("0.4*t^3*sstep(t,0.0,0.5)", {"t"}));
  auto Phi2 = TimeFn::from_expr(ExprFn::parse("-0.2*t^2*sstep(t,0.0,0.5)", {"t"}));
  auto pi0 = build_Pi0(Phi0, v, a);
  auto pi1 = recurse_Pi(pi0, Phi1);
  auto pi2 = recurse_Pi(pi1, Phi2);

  auto bvp = [&](const BoundaryLayerTerm& target, const BoundaryLayerTerm& prev, double t,
                 double L, int n) {
    double hh = L / n;
    std::vector<double> al(n - 1), bl(n - 1), cl(n - 1), r(n - 1);
    for (int i = 1; i < n; ++i) {
      double xi = i * hh;
      al[static_cast<std::size_t>(i) - 1] = 1.0 / (hh * hh) - lam / (2 * hh);
      bl[static_cast<std::size_t>(i) - 1] = -2.0 / (hh * hh);
      cl[static_cast<std::size_t>(i) - 1] = 1.0 / (hh * hh) + lam / (2 * hh);
      r[static_cast<std::size_t>(i) - 1] = prev.dt(xi, t) / a;
    }
    r[0] -= al[0] * target.value(0.0, t);
    std::vector<double> cp(static_cast<std::size_t>(n) - 1), dp(static_cast<std::size_t>(n) - 1);
    cp[0] = cl[0] / bl[0];
    dp[0] = r[0] / bl[0];
    for (int i = 1; i < n - 1; ++i) {
      double m = bl[static_cast<std::size_t>(i)] - al[static_cast<std::size_t>(i)] * cp[static_cast<std::size_t>(i) - 1];
      cp[static_cast<std::size_t>(i)] = cl[static_cast<std::size_t>(i)] / m;
      dp[static_cast<std::size_t>(i)] =
          (r[static_cast<std::size_t>(i)] - al[static_cast<std::size_t>(i)] * dp[static_cast<std::size_t>(i) - 1]) / m;
    }
    std::vector<double> sol(static_cast<std::size_t>(n) + 1, 0.0);
    sol[static_cast<std::size_t>(n) - 1] = dp[static_cast<std::size_t>(n) - 2];
    for (int i = n - 3; i >= 0; --i)
      sol[static_cast<std::size_t>(i) + 1] =
          dp[static_cast<std::size_t>(i)] - cp[static_cast<std::size_t>(i)] * sol[static_cast<std::size_t>(i) + 2];
    sol[0] = target.value(0.0, t);
    double sup = 0.0;
    for (int i = 0; i <= n; i += 41)
      sup = std::max(sup, std::abs(sol[static_cast<std::size_t>(i)] - target.value(i * hh, t)));
    return sup;
  };

  double sup = 0.0;
  for (double t : {0.2, 0.45}) {
    sup = std::max(sup, bvp(pi1, pi0, t, 30.0, 200000));
    sup = std::max(sup, bvp(pi2, pi1, t, 30.0, 200000));
  }
  double ode = 0.0;
  for (double t : {0.2, 0.45})
    for (double xi : {0.1, 0.9, 2.5, 7.0}) {
      ode = std::max(ode, std::abs(pi1.ode_residual(xi, t, &pi0)));
      ode = std::max(ode, std::abs(pi2.ode_residual(xi, t, &pi1)));
    }
  bool ok = sup <= 1e-8 && ode <= 1e-12;
  outcome(7, ok, fmt("BVP oracle sup %.3e (<= 1e-8), ODE residual %.3e (<= 1e-12)", sup, ode));
}

void criterion_8_node_layer() {
  auto spec = std::make_shared<JunctionSpec>(load_spec(testcfg::kNodeActiveConfig));
  spec->numerics.voxel_div = 6;
  spec->numerics.node_t_points = 13;

  // Constant-data exactness.
  double const_defect = 0.0;
  {
    NodeLayerBuilder builder(spec);
    const double cval = 0.83;
    FarFieldData far;
    far.zero = false;
    for (int arm = 0; arm < 3; ++arm)
      far.trace[static_cast<std::size_t>(arm)] =
          Profile1D::build(9, 0.0, spec->T, [cval](double) { return cval; });
    auto spec0 = std::make_shared<JunctionSpec>(*spec);
    spec0->node.phi_node = ExprFn::constant(0.0, {"xi1", "xi2", "xi3", "t"});
    NodeLayerBuilder b0(spec0);
    auto fields = b0.solve_Nk(0, far, nullptr, 0);
    for (std::array<double, 3> xi : {std::array<double, 3>{0.0, 0.0, 0.0},
                                     std::array<double, 3>{0.31, 0.02, -0.03},
                                     std::array<double, 3>{2.6, 0.05, 0.0},
                                     std::array<double, 3>{0.01, 5.5, 0.02}}) {
      const_defect = std::max(const_defect, std::abs(fields[0].value(xi, 0.2) - cval));
    }
  }

  // Active node flux: decay fit and truncation insensitivity.
  auto run_layer = [&](double Ltr) {
    auto s2 = std::make_shared<JunctionSpec>(*spec);
    s2->numerics.L_tr = Ltr;
    auto builder = std::make_shared<NodeLayerBuilder>(s2);
    FarFieldData far;
    far.zero = false;
    double c3 = s2->edges[2].v0() * s2->edges[2].h0() * s2->edges[2].h0();
    far.trace[2] = Profile1D::build(
        33, 0.0, s2->T, [builder, c3](double t) { return builder->node_flux_datum(t) / c3; });
    return builder->solve_Nk(0, far, nullptr, 0);
  };
  auto f8 = run_layer(8.0);
  auto f16 = run_layer(16.0);

  auto fits = decay_rate(f8[0]);
  double beta = 0.0;
  bool any = false;
  for (const auto& f : fits)
    if (!f.trivial && f.decaying) {
      any = true;
      beta = std::max(beta, f.beta);
    }
  double trunc = 0.0;
  for (std::array<double, 3> xi : {std::array<double, 3>{0.05, 0.03, 0.0},
                                   std::array<double, 3>{0.2, 0.0, 0.1}}) {
    for (double t : {0.2, 0.4})
      trunc = std::max(trunc, std::abs(f8[0].value(xi, t) - f16[0].value(xi, t)));
  }
  bool ok = const_defect <= 1e-9 && any && beta > 0.0 && trunc <= 1e-5;
  outcome(8, ok,
          fmt("constant-data defect %.3e (<= 1e-9), decay beta %.2f (> 0), L_tr doubling "
              "change %.3e (<= 1e-5)",
              const_defect, beta, trunc));
}

void criterion_9_apriori_sweeps() {
  auto spec = std::make_shared<JunctionSpec>(load_spec(testcfg::kCanonicalConfig));
  SolverHooks sources;
  sources.volume_source = [](const std::array<double, 3>& x, double) {
    return (x[0] > 0.3 && x[0] < 0.7) || (x[1] > 0.3 && x[1] < 0.7) ? 1.0 : 0.0;
  };
  std::vector<double> eps{0.2, 0.1, 0.05};
  auto rep = max_principle_check(*spec, sources, eps, 0.3, 4);
  auto grad = energy_estimate_check(*spec, sources, eps, 0.3, 4);
  bool ok = !rep.degenerate && rep.spread <= 2.0 && grad.spread <= 2.0;
  outcome(9, ok, fmt("max-principle ratio spread %.3f (<= 2), gradient constant spread %.3f "
                     "(<= 2)",
                     rep.spread, grad.spread));
}

}  // namespace

int main() {
  std::printf("junction-asy acceptance suite\n");
  criterion_1_residual_order();
  criterion_2_order_gap();
  criterion_3_sup_error();
  criterion_4_kirchhoff_and_continuity();
  criterion_5_characteristics_vs_upwind();
  criterion_6_disk_analytic();
  criterion_7_boundary_layer();
  criterion_8_node_layer();
  criterion_9_apriori_sweeps();
  if (g_inconclusive)
    std::printf("%d criterion(s) inconclusive (not failed)\n", g_inconclusive);
  if (g_failures) {
    std::printf("ACCEPTANCE: %d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("ACCEPTANCE: all criteria passed\n");
  return 0;
}
