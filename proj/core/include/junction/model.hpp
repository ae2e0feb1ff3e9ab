#pragma once

#include <array>
#include <string>
#include <vector>

#include "junction/expr.hpp"
#include "junction/node_geometry.hpp"

namespace junction {

class SpecError : public std::runtime_error {
 public:
  SpecError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class FlowRegimeTag { TwoInletsOneOutlet, OneInletTwoOutlets };

struct FlowRegime {
  FlowRegimeTag tag = FlowRegimeTag::TwoInletsOneOutlet;
  std::vector<int> inlets;   // 0-based edge indices
  std::vector<int> outlets;
};

/// One thin cylinder. Expression variable conventions: aperture/v_long in x;
/// v_trans components in (x, xi1, xi2); diffusion entries in (xi1, xi2);
/// phi in (xi1, xi2, x, t); q in t. (xi1, xi2) are the transverse global
/// axes in increasing order: edge 0 -> (x2,x3), edge 1 -> (x1,x3),
/// edge 2 -> (x1,x2).
struct EdgeSpec {
  int index = 0;
  double length = 1.0;
  ExprFn aperture, aperture_dx;
  ExprFn v_long, v_long_dx;
  std::array<ExprFn, 2> v_trans;
  std::array<ExprFn, 2> v_trans_div;  // d(v1)/dxi1, d(v2)/dxi2
  ExprFn a11, a12, a22;               // transverse diffusion block
  double a_axial = 1.0;
  ExprFn phi;  // lateral flux data
  ExprFn q;    // base Dirichlet data
  double end_zone = 0.1;

  double h(double x) const { return aperture.eval({x}); }
  double dh(double x) const { return aperture_dx.eval({x}); }
  double v(double x) const { return v_long.eval({x}); }
  double dv(double x) const { return v_long_dx.eval({x}); }
  double h0() const { return h(0.0); }
  double v0() const { return v(0.0); }
  double phi_at(double xi1, double xi2, double x, double t) const {
    return phi.eval({xi1, xi2, x, t});
  }
  bool has_vtrans() const { return !(v_trans[0].is_zero() && v_trans[1].is_zero()); }
};

struct NodeSpec {
  double ell0 = 0.3;
  double cube_halfwidth = 0.25;
  std::array<ExprFn, 6> diffusion;  // a11,a12,a13,a22,a23,a33 of (xi1,xi2,xi3)
  ExprFn phi_node;                  // (xi1,xi2,xi3,t)
  std::array<double, 3> h0{0.2, 0.2, 0.2};

  NodeShape shape() const { return NodeShape{cube_halfwidth, ell0, h0}; }
  void diffusion_matrix(const std::array<double, 3>& xi, double out[3][3]) const;
};

struct Numerics {
  int n_theta = 256;        // circle quadrature nodes
  int x_points = 64;        // Chebyshev stations for edge profiles
  int t_points = 129;       // uniform time grid for edge profiles
  int disk_nr = 32;         // polar cells, radial
  int disk_ntheta = 64;     // polar cells, angular
  int disk_stations = 0;    // 0 -> x_points
  int disk_t_points = 33;
  int voxel_div = 16;       // voxels per min h_i(0)
  double L_tr = 8.0;        // arm truncation length (xi units)
  int node_t_points = 33;
  double decay_tol = 1e-4;
  double quad_tol = 1e-10;
  int quad_max_depth = 30;
  int char_grid = 1024;     // characteristic table cells
};

struct JunctionSpec {
  std::array<EdgeSpec, 3> edges;
  NodeSpec node;
  double T = 1.0;
  int expansion_order = 2;
  double gamma = 0.7;
  double delta = 0.1;
  FlowRegime regime;
  Numerics numerics;

  double vertex_speed(int edge) const { return edges[static_cast<std::size_t>(edge)].v0(); }
  bool is_inlet(int edge) const;
};

/// Parse and cross-check a JSON config document (see README for the schema).
JunctionSpec load_spec(const std::string& json_text);
JunctionSpec load_spec_file(const std::string& path);

struct CheckResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;
  std::string location;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
  const CheckResult* find(const std::string& name) const;
};

/// Runs the full standing-assumption checklist; failures are report entries,
/// never exceptions.
ValidationReport validate(const JunctionSpec& spec);

/// Lateral-average of the flux data: (2 pi h)^-1 times the line integral of
/// phi around the cross-section circle, by the N-theta trapezoidal rule.
double lateral_average_phi(const EdgeSpec& edge, double x, double t, int n_theta = 256);

/// breve-phi: -(1/pi) integral of phi_node over Gamma_0 at time t, using the
/// given surface quadrature mesh (see NodeMesh).
double node_flux_average(const NodeSpec& node, const NodeMesh& node_mesh, double t);

/// Convenience overload building a node-only mesh at dx = min h0 / voxel_div.
double node_flux_average(const NodeSpec& node, double t, int voxel_div = 16);

}  // namespace junction
