#include "junction/reference_solver.hpp"

#include <cmath>

#include "configs.hpp"
#include "doctest.h"

using namespace junction;

namespace {
JunctionSpec canonical() { return load_spec(testcfg::kCanonicalConfig); }
}  // namespace

TEST_CASE("mesh size guard and cell-count sanity") {
  JunctionSpec spec = canonical();
  double eps = 0.1;
  CHECK_THROWS(mesh_junction(spec, eps, eps * 0.2 / 3.0));

  VoxelMesh mesh = mesh_junction(spec, eps, eps / 20.0);
  // Volume estimate: 3 arms of radius eps*h plus the node.
  double vol_est = 0.0;
  for (const auto& e : spec.edges)
    vol_est += M_PI * (eps * 0.2) * (eps * 0.2) * e.length;
  double cells_est = vol_est / std::pow(eps / 20.0, 3);
  CHECK(mesh.n_cells() > 0.5 * cells_est);
  CHECK(mesh.n_cells() < 2.5 * cells_est);
  CHECK(mesh.n_cells() >= 8000);
  CHECK(mesh.n_cells() <= 40000);

  // Halving eps with dx ~ eps roughly doubles the count.
  VoxelMesh mesh2 = VoxelMesh::build(spec, eps / 2, eps / 40.0);
  double ratio = static_cast<double>(mesh2.n_cells()) / mesh.n_cells();
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.9);

  // Staircase lateral area converges to the analytic lateral area within 5%.
  double analytic = 2.0 * M_PI * (eps * 0.2) * (1.0 - eps * spec.node.ell0);
  CHECK(mesh.lateral_area(0) == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("zero data stays identically zero") {
  JunctionSpec spec = canonical();
  for (auto& e : spec.edges) {
    e.q = ExprFn::constant(0.0, {"t"});
    e.phi = ExprFn::constant(0.0, {"xi1", "xi2", "x", "t"});
    e.v_trans[0] = ExprFn::constant(0.0, {"x", "xi1", "xi2"});
    e.v_trans[1] = ExprFn::constant(0.0, {"x", "xi1", "xi2"});
    e.v_trans_div[0] = e.v_trans[0].derivative("xi1");
    e.v_trans_div[1] = e.v_trans[1].derivative("xi2");
  }
  double eps = 0.2;
  VoxelMesh mesh = mesh_junction(spec, eps, eps * 0.2 / 4.0);
  FullSolution sol = solve_full(spec, eps, mesh, 0.0012, 0.1, 3);
  CHECK(sol.max_abs == 0.0);
}

TEST_CASE("manufactured solution converges at first order") {
  JunctionSpec spec = canonical();
  // u* = t^2 x1 with sources for the axial/node fields only; drop the
  // transverse velocity so the induced data stay closed form.
  for (auto& e : spec.edges) {
    e.v_trans[0] = ExprFn::constant(0.0, {"x", "xi1", "xi2"});
    e.v_trans[1] = ExprFn::constant(0.0, {"x", "xi1", "xi2"});
    e.v_trans_div[0] = e.v_trans[0].derivative("xi1");
    e.v_trans_div[1] = e.v_trans[1].derivative("xi2");
  }
  double eps = 0.2;
  const double a = 1.0;  // identity diffusion in the canonical instance

  // u*(x,t) = t^2 x1 globally; sources per subdomain, exact Dirichlet at the
  // bases, flux data on the lateral/node boundaries.
  auto exact = [](const std::array<double, 3>& x, double t) { return t * t * x[0]; };
  std::array<double, 3> speeds{spec.edges[0].v0(), spec.edges[1].v0(), spec.edges[2].v0()};
  NodePotential pot = solve_potential(spec.node, speeds, 8);

  SolverHooks hooks;
  hooks.base_value = [&](const std::array<double, 3>& x, double t, int) { return exact(x, t); };
  hooks.volume_source = [&, eps](const std::array<double, 3>& x, double t) {
    // du*/dt + div(V u*) with div-free fields: 2 t x1 + t^2 V_1(x).
    std::array<double, 3> xi{x[0] / eps, x[1] / eps, x[2] / eps};
    bool node = spec.node.shape().inside_node(xi);
    double v1;
    if (node) {
      v1 = pot.velocity(xi)[0];
    } else if (std::abs(x[1]) < eps * 0.2 && std::abs(x[2]) < eps * 0.2 && x[0] > 0) {
      v1 = spec.edges[0].v(x[0]);
    } else {
      v1 = 0.0;  // arms 2 and 3 carry no axial x1-velocity
    }
    return 2.0 * t * x[0] + t * t * v1;
  };
  // eps phi = (-eps D grad u*).n with grad u* = (t^2,0,0); the advective
  // normal flux vanishes on the true surfaces for the canonical fields.
  hooks.lateral_flux = [&](const std::array<double, 3>&, const std::array<double, 3>& nrm,
                           double t, int) { return -a * t * t * nrm[0]; };
  hooks.node_flux = [&, eps](const std::array<double, 3>&, const std::array<double, 3>& nrm,
                             double t) { return -eps * a * t * t * nrm[0]; };

  // The manufactured field lives on arm 1; fixed interior probes there, half
  // a radius from the staircase walls and clear of the node.
  std::vector<std::array<double, 3>> probes;
  for (int i = 0; i < 32; ++i) {
    double xe = 0.25 + 0.65 * i / 31.0;
    double r = 0.45 * eps * 0.2;
    probes.push_back({xe, (i % 2) ? r : -r * 0.5, (i % 3) ? 0.0 : r * 0.4});
  }

  auto err_at = [&](int refine) {
    pot = solve_potential(spec.node, speeds, std::max(8, 2 * refine));
    double dx = eps * 0.2 / refine;
    VoxelMesh mesh = VoxelMesh::build(spec, eps, dx);
    double dt = 0.1 * dx;
    FullSolution sol = solve_full(spec, eps, mesh, dt, 0.25, 3, &hooks);
    double linf = 0.0;
    for (const auto& p : probes) {
      double e = std::abs(sol.probe_snapshot(sol.snapshots.size() - 1, p) -
                          exact(p, sol.snapshot_times.back()));
      linf = std::max(linf, e);
    }
    return linf;
  };

  double e1 = err_at(3);
  double e2 = err_at(6);
  double order = std::log2(e1 / e2);
  INFO("e1=", e1, " e2=", e2, " order=", order);
  CHECK(order >= 0.8);
  CHECK(e2 < e1);
}

TEST_CASE("mass bookkeeping balances") {
  JunctionSpec spec = canonical();
  double eps = 0.2;
  VoxelMesh mesh = mesh_junction(spec, eps, eps * 0.2 / 5.0);
  FullSolution sol = solve_full(spec, eps, mesh, 0.0012, 0.3, 5);
  CHECK(sol.max_abs > 0.0);  // data active by t=0.3
  CHECK(sol.mass_audit_max <= 1e-6);
}

TEST_CASE("advection substep creates no new extrema; norms stay bounded") {
  JunctionSpec spec = canonical();
  for (auto& e : spec.edges) {
    e.q = ExprFn::constant(0.0, {"t"});
    e.phi = ExprFn::constant(0.0, {"xi1", "xi2", "x", "t"});
  }
  SolverHooks hooks;
  hooks.zero_dirichlet = true;
  hooks.check_monotone = true;
  hooks.initial = [](const std::array<double, 3>& x) {
    double d2 = (x[0] - 0.5) * (x[0] - 0.5);
    return std::exp(-400.0 * d2);
  };
  double eps = 0.2;
  VoxelMesh mesh = mesh_junction(spec, eps, eps * 0.2 / 5.0);
  FullSolution sol = solve_full(spec, eps, mesh, 0.0012, 0.2, 9, &hooks);
  CHECK(sol.monotone_defect <= 1e-12);
  // l2 norm of the snapshots is non-increasing (upwind + implicit diffusion).
  double prev = 1e300;
  for (const auto& snap : sol.snapshots) {
    double n2 = 0.0;
    for (double v : snap) n2 += v * v;
    CHECK(n2 <= prev * (1.0 + 1e-12));
    prev = n2;
  }
}

TEST_CASE("refinement study decreases the self-error monotonically") {
  JunctionSpec spec = canonical();
  double eps = 0.2;
  std::vector<double> errs;
  VoxelMesh fine = VoxelMesh::build(spec, eps, eps * 0.2 / 8.0);
  FullSolution ref = solve_full(spec, eps, fine, 0.0005, 0.2, 3);
  for (int refine : {3, 4, 5}) {
    VoxelMesh mesh = VoxelMesh::build(spec, eps, eps * 0.2 / refine);
    FullSolution sol = solve_full(spec, eps, mesh, 0.0012, 0.2, 3);
    double err = 0.0;
    int cnt = 0;
    for (std::size_t c = 0; c < mesh.n_cells(); c += 11) {
      auto p = mesh.center(c);
      std::array<double, 3> q{p[0], p[1], p[2]};
      if (fine.cell_at(q) < 0) continue;
      err = std::max(err, std::abs(sol.snapshots.back()[c] -
                                   ref.probe_snapshot(ref.snapshots.size() - 1, q)));
      ++cnt;
    }
    REQUIRE(cnt > 50);
    errs.push_back(err);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

TEST_CASE("max principle and gradient sweeps have bounded constants") {
  JunctionSpec spec = canonical();
  SolverHooks sources;
  sources.volume_source = [](const std::array<double, 3>& x, double) {
    return (x[0] > 0.3 && x[0] < 0.7) ? 1.0 : 0.0;
  };
  std::vector<double> eps_list{0.2, 0.1};
  auto rep = max_principle_check(spec, sources, eps_list, 0.25, 3);
  REQUIRE_FALSE(rep.degenerate);
  CHECK(rep.spread <= 2.0);
  for (double r : rep.ratio) CHECK(r > 0.0);

  auto grad = energy_estimate_check(spec, sources, eps_list, 0.25, 3);
  CHECK(grad.spread <= 2.0);

  // Linearity: doubling the source doubles the response.
  SolverHooks dbl = sources;
  dbl.volume_source = [&](const std::array<double, 3>& x, double t) {
    return 2.0 * sources.volume_source(x, t);
  };
  auto rep2 = max_principle_check(spec, dbl, {0.2}, 0.25, 3);
  auto rep1 = max_principle_check(spec, sources, {0.2}, 0.25, 3);
  CHECK(rep2.ratio[0] == doctest::Approx(rep1.ratio[0]).epsilon(1e-8));

  SolverHooks none;
  auto repz = max_principle_check(spec, none, eps_list, 0.25, 3);
  CHECK(repz.degenerate);
}
