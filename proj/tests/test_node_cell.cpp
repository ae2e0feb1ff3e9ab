#include "junction/node_cell.hpp"

#include <cmath>

#include "configs.hpp"
#include "doctest.h"

using namespace junction;

namespace {

std::shared_ptr<JunctionSpec> coarse_spec(const char* base, int voxel_div = 4,
                                          int node_t = 9) {
  auto spec = std::make_shared<JunctionSpec>(load_spec(base));
  spec->numerics.voxel_div = voxel_div;
  spec->numerics.node_t_points = node_t;
  return spec;
}

Profile1D const_profile(double c, double T) {
  return Profile1D::build(9, 0.0, T, [c](double) { return c; });
}

}  // namespace

TEST_CASE("zero vertex speeds give the zero potential") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodePotential pot = solve_potential(spec->node, {0.0, 0.0, 0.0}, 4);
  for (double v : pot.p) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("canonical potential: discrete flux balance and CG residual") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodePotential pot = solve_potential(spec->node, {-1.0, -1.0, 2.0}, 8);
  CHECK(std::abs(pot.flux_balance) <= 1e-8);
  CHECK(pot.cg_residual <= 1e-10);
  double mean = 0.0;
  for (double v : pot.p) mean += v;
  mean /= static_cast<double>(pot.p.size());
  CHECK(std::abs(mean) <= 1e-9);
}

TEST_CASE("potential symmetry under swapping the two inlets") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodePotential pot = solve_potential(spec->node, {-1.0, -1.0, 2.0}, 6);
  const NodeMesh& mesh = *pot.mesh;
  double worst = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); c += 7) {
    auto xi = mesh.center(c);
    std::array<double, 3> xis{xi[1], xi[0], xi[2]};
    std::int32_t cs = mesh.cell_at(xis);
    if (cs < 0) continue;
    worst = std::max(worst, std::abs(pot.p[c] - pot.p[static_cast<std::size_t>(cs)]));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("conservation violation rejects the potential problem") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  CHECK_THROWS(solve_potential(spec->node, {-1.0, -1.0, 1.0}, 4));
}

TEST_CASE("constant far-field data reproduces the constant exactly") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodeLayerBuilder builder(spec);
  const double c = 0.83;
  FarFieldData far;
  far.zero = false;
  for (int arm = 0; arm < 3; ++arm) far.trace[static_cast<std::size_t>(arm)] = const_profile(c, spec->T);
  auto fields = builder.solve_Nk(0, far, nullptr, 0);
  const NodeField& N0 = fields[0];
  REQUIRE_FALSE(N0.zero());
  for (std::array<double, 3> xi : {std::array<double, 3>{0.0, 0.0, 0.0},
                                   std::array<double, 3>{0.31, 0.02, -0.03},
                                   std::array<double, 3>{1.7, 0.05, 0.0},
                                   std::array<double, 3>{0.01, 4.0, 0.06},
                                   std::array<double, 3>{0.04, -0.02, 6.5}}) {
    CHECK(N0.value(xi, 0.2) == doctest::Approx(c).epsilon(1e-9));
  }
  // The decaying part is machine zero in the outer arms.
  for (int arm = 0; arm < 3; ++arm) CHECK(N0.arm_outer_sup(arm) <= 1e-9);
}

TEST_CASE("all-zero data short-circuits to the zero field") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodeLayerBuilder builder(spec);
  FarFieldData far;
  far.zero = true;
  auto fields = builder.solve_Nk(0, far, nullptr, 2);
  for (const auto& f : fields) {
    CHECK(f.zero());
    CHECK(f.value({0.1, 0.0, 0.0}, 0.1) == 0.0);
  }
}

TEST_CASE("node flux drives a decaying layer with zero data at t=0") {
  auto spec = coarse_spec(testcfg::kNodeActiveConfig, 5, 9);
  NodeLayerBuilder builder(spec);
  FarFieldData far;
  far.zero = false;
  // Outlet trace balancing the Kirchhoff datum: w3(0,t) = breve/(v3 h3^2).
  double c3 = spec->edges[2].v0() * spec->edges[2].h0() * spec->edges[2].h0();
  far.trace[2] = Profile1D::build(spec->numerics.node_t_points, 0.0, spec->T,
                                  [&](double t) { return builder.node_flux_datum(t) / c3; });
  auto fields = builder.solve_Nk(0, far, nullptr, 1);
  const NodeField& N0 = fields[0];
  REQUIRE_FALSE(N0.zero());

  // Data vanish at t=0, so the layer does.
  CHECK(std::abs(N0.value({0.1, 0.05, 0.0}, 0.0)) <= 1e-10);
  // Time derivative field is genuinely the derivative of the layer.
  const NodeField& N0dot = fields[1];
  double t = 0.25, dt = 0.02;
  std::array<double, 3> xi{0.15, 0.03, 0.02};
  double fd = (N0.value(xi, t + dt) - N0.value(xi, t - dt)) / (2 * dt);
  CHECK(N0dot.value(xi, t) == doctest::Approx(fd).epsilon(0.02).scale(0.01));

  auto fits = decay_rate(N0);
  int decaying = 0;
  for (const auto& f : fits)
    if (f.decaying && !f.trivial) ++decaying;
  CHECK(decaying >= 1);  // the inlet arms carry e^{-|v|xi/a} layers
}

TEST_CASE("solvability residual measures the Kirchhoff defect") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodeLayerBuilder builder(spec);
  FarFieldData far;
  far.zero = false;
  far.trace[2] = const_profile(1.0, spec->T);  // w3(0,.) = 1, others 0
  auto zero_rhs = [](double) { return 0.0; };
  // v3 h3^2 = 2 * 0.04 = 0.08.
  CHECK(builder.solvability_residual(far, zero_rhs) == doctest::Approx(0.08).epsilon(1e-10));

  FarFieldData none;
  none.zero = true;
  CHECK(builder.solvability_residual(none, zero_rhs) == doctest::Approx(0.0));
}

TEST_CASE("d_1 reduces to the explicit trace-derivative terms") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodeLayerBuilder builder(spec);

  // Previous-order fields identically zero (N0 constant in t has zero time
  // derivative; the volume integrals vanish).
  FarFieldData far0;
  far0.zero = true;
  auto prev = builder.solve_Nk(0, far0, nullptr, 1);

  // Psi_1 with coefficient c1(t) = t on every arm.
  FarFieldData far1;
  far1.zero = false;
  for (int arm = 0; arm < 3; ++arm) {
    far1.psi[static_cast<std::size_t>(arm)].push_back(
        Profile1D::build(9, 0.0, spec->T, [](double t) { return t; }));
  }
  Profile1D d1 = builder.compute_dk(1, prev, far1);

  // Hand quadrature: d1(t) = -sum_i h^2 (v_i I1 - a_ii I0) * t with
  // I1 = int xi chi' dxi, I0 = int chi' dxi = 1.
  double ell0 = spec->node.ell0;
  SmoothStep chi{1.0 + ell0, 2.0 + ell0};
  double I1 = 0.0;
  int nsteps = 20000;
  for (int i = 0; i < nsteps; ++i) {
    double a = 1.0 + ell0 + i * 1.0 / nsteps;
    double b = 1.0 + ell0 + (i + 1) * 1.0 / nsteps;
    double m = 0.5 * (a + b);
    I1 += m * chi.d1(m) * (b - a);
  }
  double acc = 0.0;
  for (int arm = 0; arm < 3; ++arm) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(arm)];
    acc -= e.h0() * e.h0() * (e.v0() * I1 - e.a_axial * 1.0);
  }
  for (double t : {0.1, 0.2, 0.3}) {
    CHECK(d1.value(t) == doctest::Approx(acc * t).epsilon(1e-6));
  }

  // With vanishing Psi and zero previous fields, d_1 == 0.
  FarFieldData fz;
  fz.zero = false;
  Profile1D dz = builder.compute_dk(1, prev, fz);
  for (double t : {0.1, 0.3}) CHECK(dz.value(t) == doctest::Approx(0.0));
}

TEST_CASE("decay fit recovers a synthetic generator") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  NodeLayerBuilder builder(spec);
  auto ctx = builder.context();
  double ell0 = spec->node.ell0;
  NodeField f = make_synthetic_node_field(
      ctx, 5, spec->T, [ell0](const std::array<double, 3>& xi, double) {
        double m = std::max({xi[0], xi[1], xi[2]});
        if (m <= ell0) return 1.0;
        return std::exp(-2.0 * (m - ell0));
      });
  auto fits = decay_rate(f);
  for (const auto& fit : fits) {
    REQUIRE_FALSE(fit.trivial);
    CHECK(fit.beta == doctest::Approx(2.0).epsilon(0.01));
    CHECK(fit.decaying);
  }

  NodeField c = make_synthetic_node_field(
      ctx, 5, spec->T, [](const std::array<double, 3>&, double) { return 1.0; });
  auto cfits = decay_rate(c);
  for (const auto& fit : cfits) {
    CHECK(std::abs(fit.beta) < 0.05);
    CHECK_FALSE(fit.decaying);
  }
}

TEST_CASE("truncation insensitivity of the constant-data solve") {
  auto spec = coarse_spec(testcfg::kCanonicalConfig);
  spec->numerics.L_tr = 4.0;
  NodeLayerBuilder b1(spec);
  auto spec2 = std::make_shared<JunctionSpec>(*spec);
  spec2->numerics.L_tr = 8.0;
  NodeLayerBuilder b2(spec2);

  FarFieldData far;
  far.zero = false;
  for (int arm = 0; arm < 3; ++arm)
    far.trace[static_cast<std::size_t>(arm)] = const_profile(0.5, spec->T);
  auto f1 = b1.solve_Nk(0, far, nullptr, 0);
  auto f2 = b2.solve_Nk(0, far, nullptr, 0);
  for (std::array<double, 3> xi : {std::array<double, 3>{0.0, 0.0, 0.0},
                                   std::array<double, 3>{0.2, 0.1, 0.0}}) {
    CHECK(std::abs(f1[0].value(xi, 0.2) - f2[0].value(xi, 0.2)) <= 1e-5);
  }
}
