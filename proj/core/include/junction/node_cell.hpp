#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <optional>

#include "junction/functions.hpp"
#include "junction/interp.hpp"
#include "junction/model.hpp"
#include "junction/node_geometry.hpp"
#include "junction/steps.hpp"

namespace junction {

/// Node potential: 7-point Laplacian with Neumann data v_i on the coupling
/// disks, solved to zero mean; gradient gives the node velocity field.
struct NodePotential {
  std::shared_ptr<const NodeMesh> mesh;
  std::vector<double> p;
  std::array<std::vector<double>, 3> grad;
  double cg_residual = 0.0;
  double flux_balance = 0.0;      // sum of prescribed boundary fluxes
  double max_gamma0_normal = 0.0; // sup |grad p . nu| over Gamma_0 facets

  std::array<double, 3> velocity(const std::array<double, 3>& xi) const;
};

NodePotential solve_potential(const NodeSpec& node, const std::array<double, 3>& vertex_speeds,
                              int voxel_div);

/// Far-field data of order k: per arm the trace w_k(0,t) and the polynomial
/// Psi_k(xi,t) = sum_{j=1..k} c_j(t) xi^j with c_j = (d^j w_{k-j}/dx^j)(0,t)/j!.
struct FarFieldData {
  std::array<Profile1D, 3> trace;
  std::array<std::vector<Profile1D>, 3> psi;  // c_j per arm, j = 1..k

  double trace_at(int arm, double t, int tderiv = 0) const;
  double psi_at(int arm, double xi, double t, int tderiv = 0) const;
  double psi_dxi(int arm, double xi, double t, int tderiv = 0) const;
  bool zero = false;  // set when all coefficients vanish identically
};

/// Shared pieces of the node-layer solves: mesh, operator coefficients, the
/// cell-scale cutoff and the potential-driven advection.
class NodeLayerContext;

/// One node-layer coefficient: N_k (or a time derivative of it), with the
/// decaying part stored on the truncated voxel mesh per time sample and the
/// analytic cutoff part evaluated on demand. Beyond L_tr - 1 the stored part
/// fades into the matched asymptote over a unit band.
class NodeField {
 public:
  int order = 0;
  int tderiv = 0;

  bool zero() const { return zero_; }
  const std::vector<double>& tsamples() const { return tsamples_; }

  /// Full field d^tderiv N_k / dt^tderiv at a rescaled point xi.
  double value(const std::array<double, 3>& xi, double t) const;
  std::array<double, 3> grad(const std::array<double, 3>& xi, double t) const;
  /// Decaying part only.
  double tilde(const std::array<double, 3>& xi, double t) const;

  /// sup |tilde| over the outermost 10% of a truncated arm (max over t).
  double arm_outer_sup(int arm) const;
  double tilde_at_sample(std::size_t it, std::size_t cell) const;
  /// Integral of tilde over the truncated arm cells at time t, with the
  /// neglected-tail bound written to *tail_bound when non-null.
  double arm_tilde_integral(int arm, double t, double* tail_bound = nullptr) const;
  /// Integral of the full field over the node region at time t.
  double node_region_integral(double t) const;

  /// Structured dump: text header, then little-endian binary doubles.
  void dump(std::ostream& out) const;

  std::shared_ptr<const NodeLayerContext> context() const { return ctx_; }

  double analytic_part(const std::array<double, 3>& xi, double t) const;
  double trilinear(const std::array<double, 3>& xi, double t, bool with_analytic) const;
  double fade(const std::array<double, 3>& xi) const;

  friend class NodeLayerBuilder;
  friend NodeField make_synthetic_node_field(
      std::shared_ptr<const NodeLayerContext>, int, double,
      const std::function<double(const std::array<double, 3>&, double)>&);

 private:
  bool zero_ = true;
  std::shared_ptr<const NodeLayerContext> ctx_;
  FarFieldData far_;
  std::vector<double> tsamples_;
  std::vector<std::vector<double>> tilde_;  // [tsample][cell]
  std::array<double, 3> outer_sup_{0, 0, 0};
};

struct DecayFit {
  double beta = 0.0;
  double fit_residual = 0.0;
  bool decaying = false;
  bool trivial = false;  // field below tolerance everywhere
};

/// Least-squares fit of log(cross-section sup) against xi over the middle
/// half of each truncated arm.
std::array<DecayFit, 3> decay_rate(const NodeField& field);

/// Synthetic field from a closed-form tilde profile (diagnostics/testing of
/// the decay machinery against a known generator).
NodeField make_synthetic_node_field(std::shared_ptr<const NodeLayerContext> ctx,
                                    int node_t_points, double T,
                                    const std::function<double(const std::array<double, 3>&,
                                                               double)>& tilde_fn);

class NodeLayerBuilder {
 public:
  NodeLayerBuilder(std::shared_ptr<const JunctionSpec> spec);

  const NodePotential& potential() const;
  std::shared_ptr<const NodeLayerContext> context() const;

  /// breve-phi(t) on the truncated mesh's Gamma_0 quadrature.
  double node_flux_datum(double t) const;

  /// Solvability residual max_t |sum_i h_i^2 v_i w_k(0,t) - rhs(t)|.
  double solvability_residual(const FarFieldData& far, const ScalarFn1& rhs) const;

  /// Solve the order-k node problem (and its time derivatives up to
  /// max_tderiv) given the far field and the previous-order fields.
  /// prev[d] must hold d^d N_{k-1}/dt^d for d = 0..max_tderiv+1 (ignored for
  /// k = 0, where the node flux data drives the solve).
  std::vector<NodeField> solve_Nk(int k, const FarFieldData& far,
                                  const std::vector<NodeField>* prev, int max_tderiv,
                                  double solvability_tol = 1e-6) const;

  /// d_k(t) per the solvability condition of the order-k node problem,
  /// sampled onto the node time grid.
  Profile1D compute_dk(int k, const std::vector<NodeField>& prev_fields,
                       const FarFieldData& far_k) const;


 private:
  struct Lazy;
  void ensure_context() const;

  std::shared_ptr<const JunctionSpec> spec_;
  std::shared_ptr<Lazy> lazy_;
};

}  // namespace junction
