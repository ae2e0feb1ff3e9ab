#pragma once

#include <array>
#include <iosfwd>
#include <optional>

#include "junction/characteristics.hpp"
#include "junction/model.hpp"

namespace junction {

/// w_k on one edge: tensor interpolant (Chebyshev in x, uniform in t) built
/// from exact characteristic evaluations, with derivative access.
struct EdgeProfile {
  int edge = 0;
  int order = 0;
  Profile2D w;

  double value(double x, double t) const { return w.value(x, t); }
  double dx(double x, double t) const { return w.dx(x, t); }
  double dxx(double x, double t) const { return w.dxx(x, t); }
  double dt(double x, double t) const { return w.dt(x, t); }
  bool valid() const { return w.valid(); }
};

struct LimitSolution {
  std::array<EdgeProfile, 3> w0;
  std::array<Profile1D, 3> vertex_trace;  // w0_i(0, t)
  Profile1D breve_phi;                    // Kirchhoff right-hand side
  double kirchhoff_residual = 0.0;        // max over the t grid
};

/// eta_k weight of the lateral-data term in the order-k balance equation:
/// zero for odd k, the Taylor weight of sqrt(1+z^2) for even k.
double eta_coefficient(int k, double hprime);

/// phi-hat as an interpolant over [0,l] x [0,T] (trapezoidal circle averages
/// sampled on the profile grid).
Profile2D build_phi_hat(const EdgeSpec& edge, double T, const Numerics& num);

/// Solve  h^2 w_t + (v h^2 w)_x = g  on one edge with zero initial data.
/// Inlet edges (v<0) take base data w(l,t) = q_tilde(t); outlet edges (v>0)
/// take vertex data w(0,t) = q_tilde(t).
EdgeProfile solve_edge_transport(const EdgeSpec& edge, const ScalarFn2& g,
                                 const ScalarFn1& q_tilde, bool inlet, int order, double T,
                                 const Numerics& num);

/// Boundary value of t for the outlet edges, given the regime:
/// TwoInletsOneOutlet: edge 3 takes the Kirchhoff remainder.
/// OneInletTwoOutlets: edge 2 takes the continuity value of edge 1, edge 3
/// the Kirchhoff remainder over edges 1 and 2.
std::array<ScalarFn1, 3> vertex_outlet_data(const JunctionSpec& spec,
                                            const std::array<ScalarFn1, 3>& inlet_traces,
                                            const ScalarFn1& rhs_of_t);

/// The order-0 limit problem: inlet solves, vertex coupling, outlet solves,
/// Kirchhoff residual on the t grid.
LimitSolution solve_limit_problem(const JunctionSpec& spec);

/// Order-k (k >= 1) profiles from the per-edge sources g_k and the vertex
/// solvability data d_k.
std::array<EdgeProfile, 3> solve_wk(const JunctionSpec& spec, int k,
                                    const ScalarFn1& d_k,
                                    const std::array<ScalarFn2, 3>& g_k);

/// Kirchhoff residual max over the t grid for given profiles and data.
double kirchhoff_residual(const JunctionSpec& spec, const std::array<EdgeProfile, 3>& w,
                          const ScalarFn1& rhs_of_t);

/// CSV export: edge,k,x,t,w,dw_dx,d2w_dx2,dw_dt rows over the profile grid.
void export_profiles_csv(std::ostream& out, const std::vector<const EdgeProfile*>& profiles);

}  // namespace junction
