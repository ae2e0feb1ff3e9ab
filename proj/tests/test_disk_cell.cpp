#include "junction/disk_cell.hpp"

#include <cmath>

#include "configs.hpp"
#include "doctest.h"

using namespace junction;

namespace {
DiskSolver::Coeff one = [](double, double) { return 1.0; };
DiskSolver::Coeff zero = [](double, double) { return 0.0; };
}  // namespace

TEST_CASE("analytic radial case at the default mesh") {
  // div(grad u) = -2c with du/dr = -c on the rim, zero mean:
  // u = -(c/2)(r^2 - 1/2) on the unit disk.
  const double c = 1.0;
  DiskSolver solver(1.0, 32, 64, one, zero, one);
  double compat = 0.0;
  Eigen::VectorXd u = solver.solve([&](double, double) { return -2.0 * c; },
                                   [&](double) { return -c; }, &compat);
  CHECK(compat < 1e-10);

  auto exact = [&](double r) { return -(c / 2.0) * (r * r - 0.5); };
  double l2 = 0.0, area = 0.0;
  for (int ir = 0; ir <= 40; ++ir) {
    for (int ia = 0; ia < 32; ++ia) {
      double r = ir / 40.0, th = 2.0 * M_PI * ia / 32.0;
      double w = r + 1e-12;
      double d = solver.value(u, r, th) - exact(r);
      l2 += d * d * w;
      area += w;
    }
  }
  l2 = std::sqrt(l2 / area * M_PI);
  CHECK(l2 <= 1e-6);
  CHECK(std::abs(solver.mean(u)) <= 1e-9);
  CHECK(solver.rim_average(u) == doctest::Approx(-c / 4.0).epsilon(1e-8));
}

TEST_CASE("boundary average of angular harmonics vanishes") {
  DiskSolver solver(1.0, 8, 16, one, zero, one);
  Eigen::VectorXd u(solver.n_dof());
  // Fill with cos(theta) sampled at the nodes via a rim-only functional:
  // easier: solve with odd Neumann data, which produces an odd solution.
  double compat = 0.0;
  u = solver.solve([](double, double) { return 0.0; },
                   [](double th) { return std::cos(th); }, &compat);
  CHECK(compat < 1e-12);
  CHECK(std::abs(solver.rim_average(u)) < 1e-12);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(solver.n_dof());
  CHECK(solver.rim_average(z) == 0.0);
}

TEST_CASE("compatibility residual of unbalanced data is the area defect") {
  // RHS = 1, Neumann = 0 on the unit disk: |int f - oint g| = pi.
  DiskSolver solver(1.0, 16, 32, one, zero, one);
  Eigen::VectorXd b = solver.assemble_load([](double, double) { return 1.0; },
                                           [](double) { return 0.0; });
  CHECK(std::abs(b.sum()) == doctest::Approx(M_PI).epsilon(1e-10));
}

TEST_CASE("rotation equivariance for constant anisotropic diffusion") {
  // Rotation by a whole number of angular cells maps the discrete problem
  // onto itself exactly, so the solutions must agree to roundoff.
  const double th0 = M_PI / 4.0;  // 4 cells of the 32-cell mesh
  const double d1 = 2.0, d2 = 0.5;
  double ct = std::cos(th0), st = std::sin(th0);
  // D = R diag(d1,d2) R^T
  double a11 = d1 * ct * ct + d2 * st * st;
  double a12 = (d1 - d2) * ct * st;
  double a22 = d1 * st * st + d2 * ct * ct;

  DiskSolver iso(1.0, 16, 32, [&](double, double) { return d1; }, zero,
                 [&](double, double) { return d2; });
  DiskSolver rot(1.0, 16, 32, [&](double, double) { return a11; },
                 [&](double, double) { return a12; },
                 [&](double, double) { return a22; });

  // Radial (rotation-invariant) volume data; compatible with zero Neumann.
  auto f = [](double x1, double x2) {
    double r2 = x1 * x1 + x2 * x2;
    return (r2 - 0.5);
  };
  double ca = 0.0, cb = 0.0;
  Eigen::VectorXd ua = iso.solve(f, [](double) { return 0.15915494309189535; }, &ca);
  Eigen::VectorXd ub = rot.solve(f, [](double) { return 0.15915494309189535; }, &cb);
  // u_rot(R xi) = u_iso(xi): compare at rotated sample points.
  for (int ir = 1; ir <= 4; ++ir) {
    for (int ia = 0; ia < 8; ++ia) {
      double r = 0.2 * ir, th = 2.0 * M_PI * ia / 8.0;
      double va = iso.value(ua, r, th);
      double vb = rot.value(ub, r, th + th0);
      CHECK(va == doctest::Approx(vb).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("mesh convergence on a quartic radial oracle") {
  // div(grad u) = f with u = r^4 - 1/3 (zero mean on the unit disk):
  // f = 16 r^2, du/dr(1) = 4.
  auto f = [](double x1, double x2) { return 16.0 * (x1 * x1 + x2 * x2); };
  auto g = [](double) { return 4.0; };
  auto exact = [](double r) { return r * r * r * r - 1.0 / 3.0; };

  auto l2err = [&](int nr, int nt) {
    DiskSolver solver(1.0, nr, nt, one, zero, one);
    Eigen::VectorXd u = solver.solve(f, g);
    double l2 = 0.0, area = 0.0;
    for (int ir = 0; ir <= 60; ++ir) {
      for (int ia = 0; ia < 24; ++ia) {
        double r = ir / 60.0, th = 2.0 * M_PI * ia / 24.0 + 0.05;
        double w = r + 1e-12;
        double d = solver.value(u, r, th) - exact(r);
        l2 += d * d * w;
        area += w;
      }
    }
    return std::sqrt(l2 / area);
  };

  double e1 = l2err(8, 16);
  double e2 = l2err(16, 32);
  double order = std::log2(e1 / e2);
  INFO("e1=", e1, " e2=", e2, " order=", order);
  CHECK(order >= 1.8);
}

TEST_CASE("u1 field: analytic radial case through the builder") {
  // Constant-aperture edge with phi = c on the rim and no transverse
  // velocity. Where w0 == 0 the disk problem reduces to the analytic radial
  // case scaled by h: div(grad u1) = -2c/h, du/dnu = -c.
  std::string cfg = testcfg::kCanonicalConfig;
  auto spec = std::make_shared<JunctionSpec>(load_spec(cfg));
  // Replace the edge-1 lateral data with a pure constant in a window and
  // solve w0 = 0 by zeroing q and using t before the ramp: simpler to test
  // the solver path directly at one station via compatibility machinery.
  const EdgeSpec& e = spec->edges[0];
  const double c = 0.7, h = e.h0();
  DiskSolver solver(h, spec->numerics.disk_nr, spec->numerics.disk_ntheta,
                    [&](double a, double b) { return e.a11.eval({a, b}); },
                    [&](double a, double b) { return e.a12.eval({a, b}); },
                    [&](double a, double b) { return e.a22.eval({a, b}); });
  Eigen::VectorXd u = solver.solve([&](double, double) { return -2.0 * c / h; },
                                   [&](double) { return -c; });
  // Analytic: u = -(c/(2h))(r^2 - h^2/2), rim average -(c h)/4.
  CHECK(solver.rim_average(u) == doctest::Approx(-c * h / 4.0).epsilon(1e-7));
  for (double r : {0.05, 0.12, 0.19}) {
    double expect = -(c / (2.0 * h)) * (r * r - h * h / 2.0);
    CHECK(solver.value(u, r, 1.0) == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("zero data gives a zero field through the builder") {
  auto spec = std::make_shared<JunctionSpec>(load_spec(testcfg::kContinuityConfig));
  auto w0 = std::make_shared<EdgeProfile>();
  w0->edge = 1;
  w0->order = 0;
  w0->w = Profile2D::build(8, 0.0, 1.0, 9, 0.0, spec->T,
                           [](double, double) { return 0.0; });
  DiskCellBuilder builder(spec, 1);
  DiskField u1 = builder.solve_u1(w0);
  CHECK(u1.value(0.5, 0.05, 0.02, 1.0) == 0.0);
  CHECK(u1.hat(0.5, 1.0) == 0.0);
}
