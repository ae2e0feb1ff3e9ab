#include "junction/limit_graph.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace junction {

double eta_coefficient(int k, double hprime) {
  if (k < 1) throw std::invalid_argument("eta_coefficient: k >= 1 required");
  if (k % 2 == 1) return 0.0;
  int half = k / 2;
  double fact_k = 1.0, fact_half = 1.0;
  for (int i = 2; i <= k; ++i) fact_k *= i;
  for (int i = 2; i <= half; ++i) fact_half *= i;
  double sign = (half % 2 == 0) ? -1.0 : 1.0;  // (-1)^(k/2+1)
  return sign * fact_k * std::pow(std::abs(hprime), k) /
         (std::pow(4.0, half) * fact_half * fact_half * (k - 1));
}

Profile2D build_phi_hat(const EdgeSpec& edge, double T, const Numerics& num) {
  if (edge.phi.is_zero()) {
    return Profile2D::build(4, 0.0, edge.length, 4, 0.0, T,
                            [](double, double) { return 0.0; });
  }
  return Profile2D::build(num.x_points, 0.0, edge.length, num.t_points, 0.0, T,
                          [&](double x, double t) {
                            return lateral_average_phi(edge, x, t, num.n_theta);
                          });
}

EdgeProfile solve_edge_transport(const EdgeSpec& edge, const ScalarFn2& g,
                                 const ScalarFn1& q_tilde, bool inlet, int order, double T,
                                 const Numerics& num) {
  const double ell = edge.length;
  QuadratureOptions qopt{num.quad_tol, num.quad_max_depth};

  ScalarFn1 Lambda;
  ScalarFn2 Psi;
  ScalarFn1 qU;
  if (inlet) {
    Lambda = [&edge, ell](double y) { return -edge.v(ell - y); };
    Psi = [&edge, g, ell](double y, double t) {
      double x = ell - y;
      return edge.v(x) * g(x, t);
    };
    double scale = edge.v(ell) * edge.h(ell) * edge.h(ell);
    qU = [q_tilde, scale](double t) { return scale * q_tilde(t); };
  } else {
    Lambda = [&edge](double y) { return edge.v(y); };
    Psi = [&edge, g](double y, double t) { return edge.v(y) * g(y, t); };
    double scale = edge.v0() * edge.h0() * edge.h0();
    qU = [q_tilde, scale](double t) { return scale * q_tilde(t); };
  }

  CharacteristicMap map = build_characteristic(Lambda, ell, num.char_grid, qopt);
  ModelSolution U(std::move(map), Psi, qU, T, qopt);

  EdgeProfile prof;
  prof.edge = edge.index;
  prof.order = order;
  prof.w = Profile2D::build(num.x_points, 0.0, ell, num.t_points, 0.0, T,
                            [&](double x, double t) {
                              double y = inlet ? ell - x : x;
                              double scale = edge.v(x) * edge.h(x) * edge.h(x);
                              return U.eval(y, t) / scale;
                            });
  return prof;
}

std::array<ScalarFn1, 3> vertex_outlet_data(const JunctionSpec& spec,
                                            const std::array<ScalarFn1, 3>& inlet_traces,
                                            const ScalarFn1& rhs_of_t) {
  std::array<ScalarFn1, 3> data;
  auto coeff = [&spec](int e) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    return es.v0() * es.h0() * es.h0();
  };
  if (spec.regime.tag == FlowRegimeTag::TwoInletsOneOutlet) {
    double c1 = coeff(0), c2 = coeff(1), c3 = coeff(2);
    if (c3 == 0.0) throw std::invalid_argument("vertex_outlet_data: zero outlet speed");
    auto t1 = inlet_traces[0], t2 = inlet_traces[1];
    data[2] = [=](double t) { return (rhs_of_t(t) - c1 * t1(t) - c2 * t2(t)) / c3; };
  } else {
    double c1 = coeff(0), c2 = coeff(1), c3 = coeff(2);
    if (c2 == 0.0 || c3 == 0.0)
      throw std::invalid_argument("vertex_outlet_data: zero outlet speed");
    auto t1 = inlet_traces[0];
    data[1] = t1;  // continuity with the incoming edge
    data[2] = [=](double t) { return (rhs_of_t(t) - c1 * t1(t) - c2 * t1(t)) / c3; };
  }
  return data;
}

namespace {

Profile1D trace_at_vertex(const EdgeProfile& prof, double T, int t_points) {
  return Profile1D::build(t_points, 0.0, T,
                          [&](double t) { return prof.w.value(0.0, t); });
}

}  // namespace

double kirchhoff_residual(const JunctionSpec& spec, const std::array<EdgeProfile, 3>& w,
                          const ScalarFn1& rhs_of_t) {
  double worst = 0.0;
  const auto& tn = w[0].w.t_nodes();
  for (double t : tn) {
    double s = 0.0;
    for (std::size_t e = 0; e < 3; ++e) {
      const EdgeSpec& es = spec.edges[e];
      s += es.v0() * es.h0() * es.h0() * w[e].w.value(0.0, t);
    }
    worst = std::max(worst, std::abs(s - rhs_of_t(t)));
  }
  return worst;
}

LimitSolution solve_limit_problem(const JunctionSpec& spec) {
  const Numerics& num = spec.numerics;
  LimitSolution sol;

  std::array<Profile2D, 3> phi_hat;
  for (std::size_t e = 0; e < 3; ++e) phi_hat[e] = build_phi_hat(spec.edges[e], spec.T, num);

  // breve-phi on the shared t grid.
  if (spec.node.phi_node.is_zero()) {
    sol.breve_phi = Profile1D::build(4, 0.0, spec.T, [](double) { return 0.0; });
  } else {
    double dxn = std::min({spec.node.h0[0], spec.node.h0[1], spec.node.h0[2]}) /
                 spec.numerics.voxel_div;
    NodeMesh mesh = NodeMesh::build(spec.node.shape(), dxn, 0.0);
    sol.breve_phi = Profile1D::build(num.node_t_points, 0.0, spec.T, [&](double t) {
      return node_flux_average(spec.node, mesh, t);
    });
  }
  ScalarFn1 breve = [&sol](double t) { return sol.breve_phi.value(t); };

  auto g_of = [&phi_hat](const EdgeSpec& e) -> ScalarFn2 {
    const Profile2D* ph = &phi_hat[static_cast<std::size_t>(e.index)];
    const EdgeSpec* ep = &e;
    return [ph, ep](double x, double t) { return -2.0 * ep->h(x) * ph->value(x, t); };
  };

  // Inlets first.
  std::array<ScalarFn1, 3> traces{};
  for (int e : spec.regime.inlets) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    ScalarFn1 qb = [&es](double t) { return es.q.eval({t}); };
    sol.w0[static_cast<std::size_t>(e)] =
        solve_edge_transport(es, g_of(es), qb, true, 0, spec.T, num);
    sol.vertex_trace[static_cast<std::size_t>(e)] =
        trace_at_vertex(sol.w0[static_cast<std::size_t>(e)], spec.T, num.t_points);
    const Profile1D* tr = &sol.vertex_trace[static_cast<std::size_t>(e)];
    traces[static_cast<std::size_t>(e)] = [tr](double t) { return tr->value(t); };
  }

  auto outlet_data = vertex_outlet_data(spec, traces, breve);
  for (int e : spec.regime.outlets) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    sol.w0[static_cast<std::size_t>(e)] =
        solve_edge_transport(es, g_of(es), outlet_data[static_cast<std::size_t>(e)], false, 0,
                             spec.T, num);
    sol.vertex_trace[static_cast<std::size_t>(e)] =
        trace_at_vertex(sol.w0[static_cast<std::size_t>(e)], spec.T, num.t_points);
  }

  sol.kirchhoff_residual = kirchhoff_residual(spec, sol.w0, breve);
  return sol;
}

std::array<EdgeProfile, 3> solve_wk(const JunctionSpec& spec, int k, const ScalarFn1& d_k,
                                    const std::array<ScalarFn2, 3>& g_k) {
  if (k < 1) throw std::invalid_argument("solve_wk: k >= 1 required (use solve_limit_problem)");
  const Numerics& num = spec.numerics;
  std::array<EdgeProfile, 3> w;
  std::array<ScalarFn1, 3> traces{};
  ScalarFn1 zero = [](double) { return 0.0; };
  for (int e : spec.regime.inlets) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    w[static_cast<std::size_t>(e)] =
        solve_edge_transport(es, g_k[static_cast<std::size_t>(e)], zero, true, k, spec.T, num);
    Profile1D tr = trace_at_vertex(w[static_cast<std::size_t>(e)], spec.T, num.t_points);
    auto shared = std::make_shared<Profile1D>(std::move(tr));
    traces[static_cast<std::size_t>(e)] = [shared](double t) { return shared->value(t); };
  }
  auto outlet_data = vertex_outlet_data(spec, traces, d_k);
  for (int e : spec.regime.outlets) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    w[static_cast<std::size_t>(e)] = solve_edge_transport(
        es, g_k[static_cast<std::size_t>(e)], outlet_data[static_cast<std::size_t>(e)], false, k,
        spec.T, num);
  }
  return w;
}

void export_profiles_csv(std::ostream& out, const std::vector<const EdgeProfile*>& profiles) {
  out << "edge,k,x,t,w,dw_dx,d2w_dx2,dw_dt\n";
  char buf[256];
  for (const EdgeProfile* p : profiles) {
    for (double x : p->w.x_nodes()) {
      for (double t : p->w.t_nodes()) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.12e,%.12e,%.17g,%.17g,%.17g,%.17g\n",
                      p->edge + 1, p->order, x, t, p->value(x, t), p->dx(x, t), p->dxx(x, t),
                      p->dt(x, t));
        out << buf;
      }
    }
  }
}

}  // namespace junction
