#include <cmath>

#include "junction/composer.hpp"

namespace junction {

namespace {

Profile1D sample_trace(const EdgeProfile& w, double x, double T, int nt) {
  return Profile1D::build(nt, 0.0, T, [&](double t) { return w.value(x, t); });
}

bool profile_zero(const Profile1D& p, double T) {
  for (int i = 0; i <= 16; ++i)
    if (std::abs(p.value(T * i / 16.0)) > 1e-13) return false;
  return true;
}

}  // namespace

std::shared_ptr<const CoefficientSet> build_expansion(std::shared_ptr<const JunctionSpec> spec,
                                                      int M) {
  if (M < 0 || M > spec->expansion_order)
    throw std::invalid_argument("build_expansion: order must lie in [0, expansion_order]");
  auto cs = std::make_shared<CoefficientSet>();
  cs->spec = spec;
  cs->max_order = M;
  const Numerics& num = spec->numerics;
  const double T = spec->T;
  const int nt = num.t_points;

  for (int e = 0; e < 3; ++e)
    cs->phi_hat[static_cast<std::size_t>(e)] =
        build_phi_hat(spec->edges[static_cast<std::size_t>(e)], T, num);

  // Order 0: the limit problem.
  cs->limit = solve_limit_problem(*spec);
  cs->breve_phi = cs->limit.breve_phi;
  cs->kirchhoff.push_back(cs->limit.kirchhoff_residual);
  cs->w.emplace_back();
  for (int e = 0; e < 3; ++e)
    cs->w[0][static_cast<std::size_t>(e)] =
        std::make_shared<EdgeProfile>(cs->limit.w0[static_cast<std::size_t>(e)]);
  cs->u.emplace_back();  // u_0 == 0

  NodeLayerBuilder node(spec);

  auto far_of = [&](int k) {
    FarFieldData far;
    far.zero = true;
    for (int e = 0; e < 3; ++e) {
      const EdgeProfile& wk = *cs->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)];
      far.trace[static_cast<std::size_t>(e)] = sample_trace(wk, 0.0, T, num.t_points);
      if (!profile_zero(far.trace[static_cast<std::size_t>(e)], T)) far.zero = false;
      for (int j = 1; j <= k; ++j) {
        const EdgeProfile& wkj =
            *cs->w[static_cast<std::size_t>(k - j)][static_cast<std::size_t>(e)];
        double fact = 1.0;
        for (int m = 2; m <= j; ++m) fact *= m;
        Profile1D cj = Profile1D::build(num.t_points, 0.0, T, [&](double t) {
          if (j == 1) return wkj.dx(0.0, t) / fact;
          if (j == 2) return wkj.dxx(0.0, t) / fact;
          return wkj.w.dx3(0.0, t) / fact;
        });
        if (!profile_zero(cj, T)) far.zero = false;
        far.psi[static_cast<std::size_t>(e)].push_back(std::move(cj));
      }
    }
    return far;
  };

  // N_0 with time-derivative depth M+1 (each order consumes one level).
  FarFieldData far0 = far_of(0);
  cs->N.push_back(node.solve_Nk(0, far0, nullptr, M + 1));

  // Boundary layers at the outlet bases, order 0.
  for (int e : spec->regime.outlets) {
    const EdgeSpec& es = spec->edges[static_cast<std::size_t>(e)];
    TimeFn q = TimeFn::from_expr(es.q);
    auto w0p = std::make_shared<Profile2D>(cs->w[0][static_cast<std::size_t>(e)]->w);
    TimeFn Phi0 = TimeFn::combine(1.0, q, -1.0, TimeFn::from_profile2d(w0p, es.length));
    cs->Pi[static_cast<std::size_t>(e)].push_back(std::make_shared<BoundaryLayerTerm>(
        build_Pi0(Phi0, es.v(es.length), es.a_axial, e)));
  }

  for (int k = 1; k <= M; ++k) {
    // Transverse cell fields of order k.
    cs->u.emplace_back();
    for (int e = 0; e < 3; ++e) {
      DiskCellBuilder builder(spec, e);
      // Interpolant-level data noise is projected out of the Neumann solves;
      // the guard only needs to catch genuinely inconsistent inputs.
      const double compat_tol = 1.0;
      DiskField uf;
      if (k == 1) {
        uf = builder.solve_u1(cs->w[0][static_cast<std::size_t>(e)], compat_tol);
      } else {
        uf = builder.solve_uk(
            k, cs->w[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(e)],
            cs->u[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(e)],
            cs->w[static_cast<std::size_t>(k) - 2][static_cast<std::size_t>(e)],
            (k >= 3) ? cs->u[static_cast<std::size_t>(k) - 2][static_cast<std::size_t>(e)]
                     : nullptr,
            compat_tol);
      }
      cs->u[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)] =
          std::make_shared<DiskField>(std::move(uf));
    }

    // Vertex data d_k from the previous node layer, then the w_k ladder.
    FarFieldData far_k_psi;  // Psi coefficients only (traces come after w_k)
    far_k_psi.zero = true;
    for (int e = 0; e < 3; ++e) {
      for (int j = 1; j <= k; ++j) {
        const EdgeProfile& wkj =
            *cs->w[static_cast<std::size_t>(k - j)][static_cast<std::size_t>(e)];
        double fact = 1.0;
        for (int m = 2; m <= j; ++m) fact *= m;
        Profile1D cj = Profile1D::build(num.t_points, 0.0, T, [&](double t) {
          if (j == 1) return wkj.dx(0.0, t) / fact;
          if (j == 2) return wkj.dxx(0.0, t) / fact;
          return wkj.w.dx3(0.0, t) / fact;
        });
        if (!profile_zero(cj, T)) far_k_psi.zero = false;
        far_k_psi.psi[static_cast<std::size_t>(e)].push_back(std::move(cj));
      }
    }
    Profile1D dk = node.compute_dk(k, cs->N[static_cast<std::size_t>(k) - 1], far_k_psi);
    cs->dk.push_back(dk);
    auto dk_keep = std::make_shared<Profile1D>(dk);
    ScalarFn1 dk_fn = [dk_keep](double t) { return dk_keep->value(t); };

    std::array<ScalarFn2, 3> gk;
    for (int e = 0; e < 3; ++e) {
      const EdgeSpec* es = &spec->edges[static_cast<std::size_t>(e)];
      const EdgeProfile* wprev =
          cs->w[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(e)].get();
      const DiskField* ukf =
          cs->u[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)].get();
      const DiskField* ukm1f =
          (k >= 2) ? cs->u[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(e)].get()
                   : nullptr;
      const Profile2D* ph = &cs->phi_hat[static_cast<std::size_t>(e)];
      int kk = k;
      gk[static_cast<std::size_t>(e)] = [es, wprev, ukf, ukm1f, ph, kk](double x, double t) {
        double h = es->h(x), dh = es->dh(x);
        double dh2 = 2.0 * h * dh;  // d(h^2)/dx
        double g = es->a_axial * (dh2 * wprev->dx(x, t) + h * h * wprev->dxx(x, t));
        if (dh2 != 0.0) {
          g -= es->v(x) * dh2 * ukf->hat(x, t);
          if (ukm1f) g += es->a_axial * dh2 * ukm1f->hat_dx(x, t);
        }
        double etak = eta_coefficient(kk, dh);
        if (etak != 0.0) g -= 2.0 * h * etak * ph->value(x, t);
        return g;
      };
    }

    auto wk = solve_wk(*spec, k, dk_fn, gk);
    cs->kirchhoff.push_back(kirchhoff_residual(*spec, wk, dk_fn));
    cs->w.emplace_back();
    for (int e = 0; e < 3; ++e)
      cs->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)] =
          std::make_shared<EdgeProfile>(std::move(wk[static_cast<std::size_t>(e)]));

    // Node layer of order k, one derivative level shallower than k-1.
    FarFieldData far_k = far_k_psi;
    for (int e = 0; e < 3; ++e) {
      far_k.trace[static_cast<std::size_t>(e)] = sample_trace(
          *cs->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)], 0.0, T,
          num.t_points);
      if (!profile_zero(far_k.trace[static_cast<std::size_t>(e)], T)) far_k.zero = false;
    }
    cs->N.push_back(node.solve_Nk(k, far_k, &cs->N[static_cast<std::size_t>(k) - 1],
                                  M + 1 - k));

    // Boundary layers of order k: Phi_k = -w_k(l_e, .).
    for (int e : spec->regime.outlets) {
      const EdgeSpec& es = spec->edges[static_cast<std::size_t>(e)];
      auto wkp = std::make_shared<Profile2D>(
          cs->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)]->w);
      TimeFn Phik = TimeFn::combine(-1.0, TimeFn::from_profile2d(wkp, es.length), 0.0, TimeFn());
      cs->Pi[static_cast<std::size_t>(e)].push_back(std::make_shared<BoundaryLayerTerm>(
          recurse_Pi(*cs->Pi[static_cast<std::size_t>(e)].back(), Phik)));
    }
  }
  return cs;
}

}  // namespace junction
