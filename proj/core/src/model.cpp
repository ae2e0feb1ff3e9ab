#include "junction/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace junction {

using nlohmann::json;

void NodeSpec::diffusion_matrix(const std::array<double, 3>& xi, double out[3][3]) const {
  std::array<double, 3> p = xi;
  double a11 = diffusion[0].eval(p), a12 = diffusion[1].eval(p), a13 = diffusion[2].eval(p);
  double a22 = diffusion[3].eval(p), a23 = diffusion[4].eval(p), a33 = diffusion[5].eval(p);
  out[0][0] = a11; out[0][1] = a12; out[0][2] = a13;
  out[1][0] = a12; out[1][1] = a22; out[1][2] = a23;
  out[2][0] = a13; out[2][1] = a23; out[2][2] = a33;
}

bool JunctionSpec::is_inlet(int edge) const {
  for (int e : regime.inlets)
    if (e == edge) return true;
  return false;
}

bool ValidationReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const CheckResult* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

ExprFn parse_field(const json& j, const std::string& path, std::vector<std::string> vars) {
  if (j.is_number()) return ExprFn::constant(j.get<double>(), std::move(vars));
  if (!j.is_string()) throw SpecError(path, "expected an expression string or number");
  try {
    return ExprFn::parse(j.get<std::string>(), std::move(vars));
  } catch (const ExprError& e) {
    throw SpecError(path, std::string("expression error: ") + e.what());
  }
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw SpecError(path + "." + key, "missing required field");
  return *it;
}

double require_num(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw SpecError(path + "." + key, "expected a number");
  return v.get<double>();
}

template <typename T>
T opt(const json& j, const std::string& key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

}  // namespace

JunctionSpec load_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const std::exception& e) {
    throw SpecError("$", std::string("not valid JSON: ") + e.what());
  }

  JunctionSpec spec;
  spec.T = require_num(root, "T", "$");
  if (spec.T <= 0.0) throw SpecError("$.T", "horizon must be positive");
  spec.expansion_order = opt(root, "expansion_order", 2);
  if (spec.expansion_order < 0 || spec.expansion_order > 3)
    throw SpecError("$.expansion_order", "supported orders are 0..3");
  spec.gamma = opt(root, "gamma", 0.7);
  if (!(spec.gamma > 2.0 / 3.0 && spec.gamma < 1.0))
    throw SpecError("$.gamma", "gamma must lie in (2/3, 1)");

  const json& edges = require(root, "edges", "$");
  if (!edges.is_array() || edges.size() != 3)
    throw SpecError("$.edges", "exactly three edges required");

  for (std::size_t i = 0; i < 3; ++i) {
    const json& je = edges[i];
    std::string p = "$.edges[" + std::to_string(i) + "]";
    EdgeSpec& e = spec.edges[i];
    e.index = static_cast<int>(i);
    e.length = require_num(je, "length", p);
    if (e.length < 1.0) throw SpecError(p + ".length", "edge lengths must be >= 1");
    e.aperture = parse_field(require(je, "aperture", p), p + ".aperture", {"x"});
    e.aperture_dx = e.aperture.derivative("x");
    e.v_long = parse_field(require(je, "v_long", p), p + ".v_long", {"x"});
    e.v_long_dx = e.v_long.derivative("x");
    if (je.contains("v_trans")) {
      const json& vt = je["v_trans"];
      if (!vt.is_array() || vt.size() != 2)
        throw SpecError(p + ".v_trans", "expected two expression strings");
      e.v_trans[0] = parse_field(vt[0], p + ".v_trans[0]", {"x", "xi1", "xi2"});
      e.v_trans[1] = parse_field(vt[1], p + ".v_trans[1]", {"x", "xi1", "xi2"});
    } else {
      e.v_trans[0] = ExprFn::constant(0.0, {"x", "xi1", "xi2"});
      e.v_trans[1] = ExprFn::constant(0.0, {"x", "xi1", "xi2"});
    }
    e.v_trans_div[0] = e.v_trans[0].derivative("xi1");
    e.v_trans_div[1] = e.v_trans[1].derivative("xi2");

    const json& jd = require(je, "diffusion", p);
    e.a11 = parse_field(require(jd, "a11", p + ".diffusion"), p + ".diffusion.a11", {"xi1", "xi2"});
    e.a22 = parse_field(require(jd, "a22", p + ".diffusion"), p + ".diffusion.a22", {"xi1", "xi2"});
    if (jd.contains("a12"))
      e.a12 = parse_field(jd["a12"], p + ".diffusion.a12", {"xi1", "xi2"});
    else
      e.a12 = ExprFn::constant(0.0, {"xi1", "xi2"});
    e.a_axial = require_num(jd, "axial", p + ".diffusion");
    if (e.a_axial <= 0.0) throw SpecError(p + ".diffusion.axial", "axial entry must be positive");

    if (je.contains("phi_lateral"))
      e.phi = parse_field(je["phi_lateral"], p + ".phi_lateral", {"xi1", "xi2", "x", "t"});
    else
      e.phi = ExprFn::constant(0.0, {"xi1", "xi2", "x", "t"});
    if (je.contains("q_base"))
      e.q = parse_field(je["q_base"], p + ".q_base", {"t"});
    else
      e.q = ExprFn::constant(0.0, {"t"});
    e.end_zone = opt(je, "end_zone", 0.1 * e.length);
  }

  const json& jn = require(root, "node", "$");
  spec.node.ell0 = require_num(jn, "ell0", "$.node");
  if (!(spec.node.ell0 > 0.0 && spec.node.ell0 < 1.0 / 3.0))
    throw SpecError("$.node.ell0", "ell0 must lie in (0, 1/3)");
  spec.node.cube_halfwidth = require_num(jn, "cube_halfwidth", "$.node");
  for (std::size_t i = 0; i < 3; ++i) spec.node.h0[i] = spec.edges[i].h0();
  {
    double c = spec.node.cube_halfwidth;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(spec.node.h0[i] < c))
        throw SpecError("$.node.cube_halfwidth",
                        "cube half-width must exceed every aperture h_i(0)");
    }
    if (!(c < spec.node.ell0))
      throw SpecError("$.node.cube_halfwidth", "cube half-width must be below ell0");
  }
  {
    static const char* names[6] = {"a11", "a12", "a13", "a22", "a23", "a33"};
    const json& jd = require(jn, "diffusion", "$.node");
    for (int k = 0; k < 6; ++k) {
      std::string key = names[k];
      if (jd.contains(key))
        spec.node.diffusion[static_cast<std::size_t>(k)] =
            parse_field(jd[key], "$.node.diffusion." + key, {"xi1", "xi2", "xi3"});
      else if (key == "a11" || key == "a22" || key == "a33")
        throw SpecError("$.node.diffusion." + key, "missing required field");
      else
        spec.node.diffusion[static_cast<std::size_t>(k)] =
            ExprFn::constant(0.0, {"xi1", "xi2", "xi3"});
    }
  }
  if (jn.contains("phi_node"))
    spec.node.phi_node = parse_field(jn["phi_node"], "$.node.phi_node", {"xi1", "xi2", "xi3", "t"});
  else
    spec.node.phi_node = ExprFn::constant(0.0, {"xi1", "xi2", "xi3", "t"});

  spec.delta = opt(root, "delta", 0.1 * spec.edges[2].length);

  if (root.contains("numerics")) {
    const json& nu = root["numerics"];
    Numerics& n = spec.numerics;
    n.n_theta = opt(nu, "n_theta", n.n_theta);
    n.x_points = opt(nu, "x_points", n.x_points);
    n.t_points = opt(nu, "t_points", n.t_points);
    n.disk_nr = opt(nu, "disk_nr", n.disk_nr);
    n.disk_ntheta = opt(nu, "disk_ntheta", n.disk_ntheta);
    n.disk_stations = opt(nu, "disk_stations", n.disk_stations);
    n.disk_t_points = opt(nu, "disk_t_points", n.disk_t_points);
    n.voxel_div = opt(nu, "voxel_div", n.voxel_div);
    n.L_tr = opt(nu, "L_tr", n.L_tr);
    n.node_t_points = opt(nu, "node_t_points", n.node_t_points);
    n.decay_tol = opt(nu, "decay_tol", n.decay_tol);
    n.quad_tol = opt(nu, "quad_tol", n.quad_tol);
    n.quad_max_depth = opt(nu, "quad_max_depth", n.quad_max_depth);
    n.char_grid = opt(nu, "char_grid", n.char_grid);
  }
  if (spec.numerics.disk_stations <= 0) spec.numerics.disk_stations = spec.numerics.x_points;

  // Flow regime from the velocity signs at the vertex.
  double v1 = spec.edges[0].v0(), v2 = spec.edges[1].v0(), v3 = spec.edges[2].v0();
  if (!(v1 < 0.0))
    throw SpecError("$.edges[0].v_long", "edge 1 must be an inlet (v_1 < 0)");
  if (!(v3 > 0.0))
    throw SpecError("$.edges[2].v_long", "edge 3 must be an outlet (v_3 > 0)");
  if (v2 == 0.0)
    throw SpecError("$.edges[1].v_long", "edge 2 velocity must not vanish at the vertex");
  if (v2 < 0.0) {
    spec.regime.tag = FlowRegimeTag::TwoInletsOneOutlet;
    spec.regime.inlets = {0, 1};
    spec.regime.outlets = {2};
  } else {
    spec.regime.tag = FlowRegimeTag::OneInletTwoOutlets;
    spec.regime.inlets = {0};
    spec.regime.outlets = {1, 2};
  }
  return spec;
}

JunctionSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("$", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_spec(ss.str());
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

namespace {

void push(ValidationReport& rep, const std::string& name, bool pass, double residual,
          const std::string& where) {
  rep.checks.push_back({name, pass, residual, where});
}

double sup_abs_phi_t0_zone(const EdgeSpec& e, double xa, double xb, int k) {
  ExprFn f = (k == 0) ? e.phi : e.phi.derivative("t", k);
  double sup = 0.0;
  for (int ix = 0; ix <= 16; ++ix) {
    double x = xa + (xb - xa) * ix / 16.0;
    double h = e.h(x);
    for (int ia = 0; ia < 12; ++ia) {
      double th = 2.0 * M_PI * ia / 12.0;
      sup = std::max(sup, std::abs(f.eval({h * std::cos(th), h * std::sin(th), x, 0.0})));
    }
  }
  return sup;
}

}  // namespace

ValidationReport validate(const JunctionSpec& spec) {
  ValidationReport rep;
  const double tol = 1e-12;

  // Conservation condition at the vertex.
  {
    double s = 0.0;
    for (const auto& e : spec.edges) s += e.h0() * e.h0() * e.v0();
    push(rep, "conservation_cond1", std::abs(s) <= tol, s, "vertex");
  }

  for (const auto& e : spec.edges) {
    std::string loc = "edge " + std::to_string(e.index + 1);
    const double L = e.length;
    const double zone = e.end_zone;

    // Aperture positivity and end flatness.
    double hmin = 1e300, dh_ends = 0.0;
    for (int i = 0; i <= 200; ++i) {
      double x = L * i / 200.0;
      hmin = std::min(hmin, e.h(x));
      if (x <= zone || x >= L - zone) dh_ends = std::max(dh_ends, std::abs(e.dh(x)));
    }
    push(rep, "aperture_positive_" + std::to_string(e.index + 1), hmin > 0.0, hmin, loc);
    push(rep, "aperture_flat_ends_" + std::to_string(e.index + 1), dh_ends <= tol, dh_ends, loc);

    // Longitudinal velocity: constant sign, constant near the vertex, and
    // (outlets) constant near the base.
    double v0 = e.v0();
    bool sign_ok = true;
    double vconst0 = 0.0, vconstL = 0.0;
    for (int i = 0; i <= 200; ++i) {
      double x = L * i / 200.0;
      double v = e.v(x);
      if (v * v0 <= 0.0) sign_ok = false;
      if (x <= zone) vconst0 = std::max(vconst0, std::abs(v - v0));
      if (x >= L - zone) vconstL = std::max(vconstL, std::abs(v - e.v(L)));
    }
    push(rep, "v_long_sign_constant_" + std::to_string(e.index + 1), sign_ok, sign_ok ? 0.0 : 1.0,
         loc);
    push(rep, "v_long_const_near_vertex_" + std::to_string(e.index + 1), vconst0 <= tol, vconst0,
         loc);
    if (!spec.is_inlet(e.index))
      push(rep, "v_long_const_near_base_" + std::to_string(e.index + 1), vconstL <= tol, vconstL,
           loc);

    // Regime consistency.
    bool role_ok = spec.is_inlet(e.index) ? (v0 < 0.0) : (v0 > 0.0);
    push(rep, "regime_role_" + std::to_string(e.index + 1), role_ok, v0, loc);

    // Transverse velocity compact support (dead zones at both ends).
    double vt = 0.0;
    for (int i = 0; i <= 40; ++i) {
      double x = (i <= 20) ? zone * i / 20.0 : L - zone * (40 - i) / 20.0;
      double h = e.h(x);
      for (int ia = 0; ia < 8; ++ia) {
        double th = 2.0 * M_PI * ia / 8.0;
        double x1 = 0.7 * h * std::cos(th), x2 = 0.7 * h * std::sin(th);
        vt = std::max(vt, std::abs(e.v_trans[0].eval({x, x1, x2})));
        vt = std::max(vt, std::abs(e.v_trans[1].eval({x, x1, x2})));
      }
    }
    push(rep, "v_trans_compact_" + std::to_string(e.index + 1), vt <= tol, vt, loc);

    // Lateral flux data compact support.
    double phis = 0.0;
    for (int i = 0; i <= 40; ++i) {
      double x = (i <= 20) ? zone * i / 20.0 : L - zone * (40 - i) / 20.0;
      double h = e.h(x);
      for (int ia = 0; ia < 8; ++ia) {
        double th = 2.0 * M_PI * ia / 8.0;
        for (double tt : {0.0, 0.31 * spec.T, 0.77 * spec.T, spec.T})
          phis = std::max(
              phis, std::abs(e.phi.eval({h * std::cos(th), h * std::sin(th), x, tt})));
      }
    }
    push(rep, "phi_compact_" + std::to_string(e.index + 1), phis <= tol, phis, loc);

    // Ellipticity of the transverse diffusion block, sampled.
    double min_eig = 1e300;
    for (int ir = 0; ir <= 4; ++ir) {
      for (int ia = 0; ia < 8; ++ia) {
        double h = e.h0();
        double r = h * ir / 4.0, th = 2.0 * M_PI * ia / 8.0;
        double x1 = r * std::cos(th), x2 = r * std::sin(th);
        double a = e.a11.eval({x1, x2}), b = e.a12.eval({x1, x2}), c = e.a22.eval({x1, x2});
        double tr = a + c, det = a * c - b * b;
        double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        min_eig = std::min(min_eig, tr / 2.0 - disc);
      }
    }
    min_eig = std::min(min_eig, e.a_axial);
    push(rep, "ellipticity_" + std::to_string(e.index + 1), min_eig > 0.0, min_eig, loc);

    // Matching conditions and higher-order flatness at t = 0.
    double q0 = std::abs(e.q.eval({0.0}));
    double q1 = std::abs(e.q.derivative("t").eval({0.0}));
    push(rep, "matching_q_" + std::to_string(e.index + 1), q0 <= tol && q1 <= tol,
         std::max(q0, q1), loc);
    int kmax = std::min(4, spec.expansion_order + 2);
    for (int k = 2; k <= kmax; ++k) {
      double qk = std::abs(e.q.derivative("t", k).eval({0.0}));
      push(rep, "flatness_q_" + std::to_string(e.index + 1) + "_order_" + std::to_string(k),
           qk <= tol, qk, loc);
    }
    for (int k = 0; k <= std::min(3, spec.expansion_order + 1); ++k) {
      double s = sup_abs_phi_t0_zone(e, 0.0, L, k);
      push(rep,
           "flatness_phi_" + std::to_string(e.index + 1) + "_order_" + std::to_string(k),
           s <= tol, s, loc);
    }
  }

  // Node data: vanishing near the coupling disks, flat at t = 0.
  {
    const NodeSpec& n = spec.node;
    double sup = 0.0;
    for (int a = 0; a < 3; ++a) {
      double h = n.h0[static_cast<std::size_t>(a)];
      for (int iz = 0; iz <= 6; ++iz) {
        double z = n.ell0 - 0.02 * (n.ell0 - n.cube_halfwidth) * iz;
        for (int ia = 0; ia < 8; ++ia) {
          double th = 2.0 * M_PI * ia / 8.0;
          std::array<double, 3> xi{};
          xi[static_cast<std::size_t>(a)] = z;
          int t1 = (a == 0) ? 1 : 0, t2 = (a == 2) ? 1 : 2;
          xi[static_cast<std::size_t>(t1)] = h * std::cos(th);
          xi[static_cast<std::size_t>(t2)] = h * std::sin(th);
          for (double tt : {0.0, 0.5 * spec.T, spec.T})
            sup = std::max(sup, std::abs(n.phi_node.eval({xi[0], xi[1], xi[2], tt})));
        }
      }
    }
    push(rep, "phi_node_vanishes_near_portals", sup <= tol, sup, "node");

    for (int k = 0; k <= std::min(3, spec.expansion_order + 1); ++k) {
      ExprFn f = (k == 0) ? n.phi_node : n.phi_node.derivative("t", k);
      double s = 0.0;
      double c = n.cube_halfwidth;
      for (int i = 0; i < 30; ++i) {
        double u = -c + 2.0 * c * (i % 7) / 6.0;
        double v = -c + 2.0 * c * ((i * 3) % 7) / 6.0;
        double w = (i % 2) ? c : -c;
        s = std::max(s, std::abs(f.eval({u, v, w, 0.0})));
        s = std::max(s, std::abs(f.eval({w, u, v, 0.0})));
        s = std::max(s, std::abs(f.eval({v, w, u, 0.0})));
      }
      push(rep, "flatness_phi_node_order_" + std::to_string(k), s <= tol, s, "node");
    }

    // Node diffusion ellipticity, sampled on the cube.
    double min_eig = 1e300;
    for (int i = 0; i < 20; ++i) {
      double c = n.cube_halfwidth;
      std::array<double, 3> xi{-c + 2 * c * (i % 5) / 4.0, -c + 2 * c * ((i * 2) % 5) / 4.0,
                               -c + 2 * c * ((i * 3) % 5) / 4.0};
      double D[3][3];
      n.diffusion_matrix(xi, D);
      // Smallest eigenvalue via a few inverse-power steps on (D - s I).
      // For 3x3 symmetric use the characteristic bound: Gershgorin lower.
      for (int r = 0; r < 3; ++r) {
        double off = std::abs(D[r][(r + 1) % 3]) + std::abs(D[r][(r + 2) % 3]);
        min_eig = std::min(min_eig, D[r][r] - off);
      }
    }
    push(rep, "ellipticity_node_gershgorin", min_eig > 0.0, min_eig, "node");
  }

  return rep;
}

double lateral_average_phi(const EdgeSpec& edge, double x, double t, int n_theta) {
  const double h = edge.h(x);
  double s = 0.0;
  for (int k = 0; k < n_theta; ++k) {
    double th = 2.0 * M_PI * k / n_theta;
    s += edge.phi.eval({h * std::cos(th), h * std::sin(th), x, t});
  }
  return s / n_theta;
}

double node_flux_average(const NodeSpec& node, const NodeMesh& mesh, double t) {
  double s = 0.0;
  for (const auto& f : mesh.facets()) {
    if (f.tag != FacetTag::Gamma0) continue;
    if (f.weight == 0.0) continue;
    s += f.weight * node.phi_node.eval({f.center[0], f.center[1], f.center[2], t});
  }
  return -s / M_PI;
}

double node_flux_average(const NodeSpec& node, double t, int voxel_div) {
  double dx = std::min({node.h0[0], node.h0[1], node.h0[2]}) / voxel_div;
  NodeMesh mesh = NodeMesh::build(node.shape(), dx, 0.0);
  return node_flux_average(node, mesh, t);
}

}  // namespace junction
