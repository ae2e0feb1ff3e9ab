#include "junction/composer.hpp"

#include <cmath>

namespace junction {

namespace {

inline void transverse_axes(int axis, int& t1, int& t2) {
  switch (axis) {
    case 0: t1 = 1; t2 = 2; break;
    case 1: t1 = 0; t2 = 2; break;
    default: t1 = 0; t2 = 1; break;
  }
}

}  // namespace

CutoffSet cutoffs(double gamma, double delta, double ell0) {
  if (!(gamma > 2.0 / 3.0 && gamma < 1.0))
    throw std::invalid_argument("cutoffs: gamma must lie in (2/3, 1)");
  if (!(delta > 0.0)) throw std::invalid_argument("cutoffs: delta must be positive");
  CutoffSet c;
  c.gamma = gamma;
  c.delta = delta;
  c.ell0 = ell0;
  c.chi_match = SmoothStep{2.0 * ell0, 3.0 * ell0};
  return c;
}

CutoffSet make_cutoffs(const JunctionSpec& spec) {
  CutoffSet c = cutoffs(spec.gamma, spec.delta, spec.node.ell0);
  for (int e : spec.regime.outlets) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    double lo = es.length - 2.0 * spec.delta;
    // The base cutoff must vanish on the support of the lateral data.
    double sup = 0.0;
    for (int i = 0; i <= 24; ++i) {
      double x = lo + (es.length - lo) * i / 24.0;
      double h = es.h(x);
      for (int ia = 0; ia < 8; ++ia) {
        double th = 2.0 * M_PI * ia / 8.0;
        for (double t : {0.0, 0.5, 1.0})
          sup = std::max(sup, std::abs(es.phi.eval(
                                  {h * std::cos(th), h * std::sin(th), x, t})));
      }
    }
    if (sup > 1e-12)
      throw std::invalid_argument(
          "cutoffs: delta band overlaps the lateral-data support on edge " +
          std::to_string(e + 1));
    c.chi_base[static_cast<std::size_t>(e)] = SmoothStep{lo, es.length - spec.delta};
  }
  return c;
}

PartialSum::PartialSum(std::shared_ptr<const CoefficientSet> coeffs, double eps, int M)
    : coeffs_(std::move(coeffs)), eps_(eps), M_(M) {
  if (M_ > coeffs_->max_order)
    throw std::invalid_argument("PartialSum: coefficients solved only through order " +
                                std::to_string(coeffs_->max_order));
  cut_ = make_cutoffs(*coeffs_->spec);
}

PartialSum assemble_partial_sum(std::shared_ptr<const CoefficientSet> coeffs, double eps,
                                int M) {
  return PartialSum(std::move(coeffs), eps, M);
}

PartialSum zero_order(std::shared_ptr<const CoefficientSet> coeffs, double eps) {
  return PartialSum(std::move(coeffs), eps, 0);
}

bool PartialSum::inside(const std::array<double, 3>& x) const {
  const JunctionSpec& spec = *coeffs_->spec;
  for (int e = 0; e < 3; ++e) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    double xe = x[static_cast<std::size_t>(e)];
    if (xe > eps_ * spec.node.ell0 && xe < es.length) {
      int t1, t2;
      transverse_axes(e, t1, t2);
      double r2 = x[static_cast<std::size_t>(t1)] * x[static_cast<std::size_t>(t1)] +
                  x[static_cast<std::size_t>(t2)] * x[static_cast<std::size_t>(t2)];
      double hr = eps_ * es.h(xe);
      if (r2 < hr * hr) return true;
    }
  }
  std::array<double, 3> xi{x[0] / eps_, x[1] / eps_, x[2] / eps_};
  return spec.node.shape().inside_node(xi);
}

int PartialSum::host_arm(const std::array<double, 3>& x) const {
  const JunctionSpec& spec = *coeffs_->spec;
  for (int e = 0; e < 3; ++e) {
    const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
    double xe = x[static_cast<std::size_t>(e)];
    if (xe > eps_ * spec.node.ell0 && xe < es.length) {
      int t1, t2;
      transverse_axes(e, t1, t2);
      double r2 = x[static_cast<std::size_t>(t1)] * x[static_cast<std::size_t>(t1)] +
                  x[static_cast<std::size_t>(t2)] * x[static_cast<std::size_t>(t2)];
      double hr = eps_ * es.h(xe);
      if (r2 < hr * hr) return e;
    }
  }
  return -1;
}

Region PartialSum::classify(const std::array<double, 3>& x) const {
  if (!inside(x)) return Region::Outside;
  int arm = host_arm(x);
  if (arm < 0) return Region::Node;
  double xe = x[static_cast<std::size_t>(arm)];
  double s = xe / std::pow(eps_, cut_.gamma);
  if (s <= 2.0 * cut_.ell0) return Region::Node;
  if (s < 3.0 * cut_.ell0) return Region::Band;
  return Region::Arm;
}

double PartialSum::eval(const std::array<double, 3>& x, double t) const {
  const JunctionSpec& spec = *coeffs_->spec;
  const double sgam = std::pow(eps_, cut_.gamma);
  std::array<double, 3> xi{x[0] / eps_, x[1] / eps_, x[2] / eps_};

  double U = 0.0, epsk = 1.0;
  for (int k = 0; k <= M_; ++k, epsk *= eps_) {
    double term = 0.0;
    double chsum = 0.0;
    for (int e = 0; e < 3; ++e) {
      double xe = x[static_cast<std::size_t>(e)];
      double ch = cut_.match(xe / sgam);
      chsum += ch;
      if (ch == 0.0) continue;
      double w = coeffs_->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)]->value(
          xe, t);
      double uval = 0.0;
      if (k >= 1) {
        const auto& uf = coeffs_->u[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)];
        if (uf && !uf->empty()) {
          int t1, t2;
          transverse_axes(e, t1, t2);
          uval = uf->value(xe, xi[static_cast<std::size_t>(t1)],
                           xi[static_cast<std::size_t>(t2)], t);
        }
      }
      term += ch * (w + uval);
    }
    if (chsum < 1.0) {
      const NodeField& Nk = coeffs_->N[static_cast<std::size_t>(k)][0];
      if (!Nk.zero()) term += (1.0 - chsum) * Nk.value(xi, t);
    }
    for (int e : spec.regime.outlets) {
      const auto& layers = coeffs_->Pi[static_cast<std::size_t>(e)];
      if (layers.empty() || !cut_.chi_base[static_cast<std::size_t>(e)]) continue;
      double xe = x[static_cast<std::size_t>(e)];
      double chb = cut_.chi_base[static_cast<std::size_t>(e)]->value(xe);
      if (chb == 0.0) continue;
      double zeta = (spec.edges[static_cast<std::size_t>(e)].length - xe) / eps_;
      term += chb * layers[static_cast<std::size_t>(k)]->value(zeta, t);
    }
    U += epsk * term;
  }
  return U;
}

EvalDerivatives PartialSum::eval_with_gradient(const std::array<double, 3>& x, double t) const {
  const JunctionSpec& spec = *coeffs_->spec;
  const double sgam = std::pow(eps_, cut_.gamma);
  std::array<double, 3> xi{x[0] / eps_, x[1] / eps_, x[2] / eps_};
  EvalDerivatives out;

  double epsk = 1.0;
  for (int k = 0; k <= M_; ++k, epsk *= eps_) {
    double chsum = 0.0;
    std::array<double, 3> dchsum{0, 0, 0};
    for (int e = 0; e < 3; ++e) {
      double xe = x[static_cast<std::size_t>(e)];
      double ch = cut_.match(xe / sgam);
      double dch = cut_.chi_match.d1(xe / sgam) / sgam;
      chsum += ch;
      dchsum[static_cast<std::size_t>(e)] += dch;
      if (ch == 0.0 && dch == 0.0) continue;
      const EdgeProfile& wp =
          *coeffs_->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)];
      double w = wp.value(xe, t), wx = wp.dx(xe, t);
      double uval = 0.0;
      std::array<double, 2> ug{0, 0};
      double ux = 0.0;
      int t1, t2;
      transverse_axes(e, t1, t2);
      if (k >= 1) {
        const auto& uf = coeffs_->u[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)];
        if (uf && !uf->empty()) {
          double x1 = xi[static_cast<std::size_t>(t1)], x2 = xi[static_cast<std::size_t>(t2)];
          uval = uf->value(xe, x1, x2, t);
          ug = uf->grad_xi(xe, x1, x2, t);
          ux = uf->dx(xe, x1, x2, t);
        }
      }
      out.value += epsk * ch * (w + uval);
      out.grad[static_cast<std::size_t>(e)] +=
          epsk * (dch * (w + uval) + ch * (wx + ux));
      out.grad[static_cast<std::size_t>(t1)] += epsk * ch * ug[0] / eps_;
      out.grad[static_cast<std::size_t>(t2)] += epsk * ch * ug[1] / eps_;
    }
    const NodeField& Nk = coeffs_->N[static_cast<std::size_t>(k)][0];
    if (!Nk.zero() && chsum < 1.0 + 1e-14) {
      double g = Nk.value(xi, t);
      auto gg = Nk.grad(xi, t);
      out.value += epsk * (1.0 - chsum) * g;
      for (int a = 0; a < 3; ++a)
        out.grad[static_cast<std::size_t>(a)] +=
            epsk * ((1.0 - chsum) * gg[static_cast<std::size_t>(a)] / eps_ -
                    dchsum[static_cast<std::size_t>(a)] * g);
    }
    for (int e : spec.regime.outlets) {
      const auto& layers = coeffs_->Pi[static_cast<std::size_t>(e)];
      if (layers.empty() || !cut_.chi_base[static_cast<std::size_t>(e)]) continue;
      double xe = x[static_cast<std::size_t>(e)];
      const SmoothStep& cb = *cut_.chi_base[static_cast<std::size_t>(e)];
      double chb = cb.value(xe), dchb = cb.d1(xe);
      if (chb == 0.0 && dchb == 0.0) continue;
      double zeta = (spec.edges[static_cast<std::size_t>(e)].length - xe) / eps_;
      const BoundaryLayerTerm& pk = *layers[static_cast<std::size_t>(k)];
      double p = pk.value(zeta, t);
      double pz = pk.dxi(zeta, t);
      out.value += epsk * chb * p;
      out.grad[static_cast<std::size_t>(e)] += epsk * (dchb * p - chb * pz / eps_);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

double PartialSum::interior_residual(const std::array<double, 3>& x, double t) const {
  const JunctionSpec& spec = *coeffs_->spec;
  const double sgam = std::pow(eps_, cut_.gamma);
  std::array<double, 3> xi{x[0] / eps_, x[1] / eps_, x[2] / eps_};
  const int arm = host_arm(x);

  double res = 0.0, epsk = 1.0;
  for (int k = 0; k <= M_; ++k, epsk *= eps_) {
    double chsum = 0.0;
    // (A) regular parts.
    for (int e = 0; e < 3; ++e) {
      const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
      double xe = x[static_cast<std::size_t>(e)];
      double s = xe / sgam;
      double ch = cut_.match(s);
      double dch = cut_.chi_match.d1(s) / sgam;
      double d2ch = cut_.chi_match.d2(s) / (sgam * sgam);
      chsum += ch;
      if (ch == 0.0 && dch == 0.0 && d2ch == 0.0) continue;

      int t1, t2;
      transverse_axes(e, t1, t2);
      double x1 = xi[static_cast<std::size_t>(t1)], x2 = xi[static_cast<std::size_t>(t2)];
      const EdgeProfile& wp =
          *coeffs_->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)];
      double w = wp.value(xe, t), wx = wp.dx(xe, t), wxx = wp.dxx(xe, t), wt = wp.dt(xe, t);
      double uval = 0.0, ux = 0.0, ut = 0.0, uxx = 0.0, urhs = 0.0;
      std::array<double, 2> ug{0, 0};
      const DiskField* uf = nullptr;
      if (k >= 1) {
        uf = coeffs_->u[static_cast<std::size_t>(k)][static_cast<std::size_t>(e)].get();
        if (uf && uf->empty()) uf = nullptr;
      }
      if (uf) {
        uval = uf->value(xe, x1, x2, t);
        ux = uf->dx(xe, x1, x2, t);
        ut = uf->dt(xe, x1, x2, t);
        ug = uf->grad_xi(xe, x1, x2, t);
        urhs = uf->elliptic_rhs(xe, x1, x2, t);
        double hfd = 1e-4 * es.length;
        uxx = (uf->dx(xe + hfd, x1, x2, t) - uf->dx(xe - hfd, x1, x2, t)) / (2.0 * hfd);
      }
      double v = es.v(xe), dv = es.dv(xe);
      double divv = es.v_trans_div[0].eval({xe, x1, x2}) +
                    es.v_trans_div[1].eval({xe, x1, x2});
      double vb1 = es.v_trans[0].eval({xe, x1, x2}), vb2 = es.v_trans[1].eval({xe, x1, x2});

      double f = w + uval;
      double ft = wt + ut;
      double fx = wx + ux;
      double divVf = dv * f + v * fx + f * divv + vb1 * ug[0] + vb2 * ug[1];
      double divDf = es.a_axial * (wxx + uxx) + urhs / (eps_ * eps_);
      double Lf = ft + divVf - eps_ * divDf;
      res += epsk * (ch * Lf + f * v * dch -
                     eps_ * (2.0 * dch * es.a_axial * fx + f * es.a_axial * d2ch));
    }

    // (B) node part.
    const NodeField& Nk = coeffs_->N[static_cast<std::size_t>(k)][0];
    if (!Nk.zero()) {
      double g = Nk.value(xi, t);
      double gt = coeffs_->N[static_cast<std::size_t>(k)][1].value(xi, t);
      auto gg = Nk.grad(xi, t);
      double ndot_prev = 0.0;
      if (k >= 1) ndot_prev = coeffs_->N[static_cast<std::size_t>(k) - 1][1].value(xi, t);

      double Lg;
      if (arm < 0) {
        // Node region: the advection cancels against the substituted
        // elliptic identity exactly.
        Lg = gt - ndot_prev / eps_;
      } else {
        const EdgeSpec& es = spec.edges[static_cast<std::size_t>(arm)];
        double xe = x[static_cast<std::size_t>(arm)];
        int t1, t2;
        transverse_axes(arm, t1, t2);
        double x1 = xi[static_cast<std::size_t>(t1)], x2 = xi[static_cast<std::size_t>(t2)];
        double v = es.v(xe), dv = es.dv(xe), vv = es.v0();
        double divv = es.v_trans_div[0].eval({xe, x1, x2}) +
                      es.v_trans_div[1].eval({xe, x1, x2});
        double vb1 = es.v_trans[0].eval({xe, x1, x2}), vb2 = es.v_trans[1].eval({xe, x1, x2});
        double advect = dv * g + v * gg[static_cast<std::size_t>(arm)] / eps_ + g * divv +
                        vb1 * gg[static_cast<std::size_t>(t1)] +
                        vb2 * gg[static_cast<std::size_t>(t2)];
        double subst = (vv * gg[static_cast<std::size_t>(arm)] + ndot_prev) / eps_;
        Lg = gt + advect - subst;
      }
      double piece = (1.0 - chsum) * Lg;
      for (int e = 0; e < 3; ++e) {
        const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
        double xe = x[static_cast<std::size_t>(e)];
        double s = xe / sgam;
        double dch = cut_.chi_match.d1(s) / sgam;
        double d2ch = cut_.chi_match.d2(s) / (sgam * sgam);
        if (dch == 0.0 && d2ch == 0.0) continue;
        double vdot = (e == arm) ? es.v(xe) : 0.0;  // transverse V components are O(eps)
        piece -= g * vdot * dch;
        piece += eps_ * (2.0 * dch * es.a_axial * gg[static_cast<std::size_t>(e)] / eps_ +
                         g * es.a_axial * d2ch);
      }
      res += epsk * piece;
    }

    // (C) boundary-layer parts.
    for (int e : spec.regime.outlets) {
      const auto& layers = coeffs_->Pi[static_cast<std::size_t>(e)];
      if (layers.empty() || !cut_.chi_base[static_cast<std::size_t>(e)]) continue;
      const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
      double xe = x[static_cast<std::size_t>(e)];
      const SmoothStep& cb = *cut_.chi_base[static_cast<std::size_t>(e)];
      double chb = cb.value(xe), dchb = cb.d1(xe), d2chb = cb.d2(xe);
      if (chb == 0.0 && dchb == 0.0 && d2chb == 0.0) continue;
      double zeta = (es.length - xe) / eps_;
      const BoundaryLayerTerm& pk = *layers[static_cast<std::size_t>(k)];
      double p = pk.value(zeta, t);
      double pz = pk.dxi(zeta, t);
      double pt = pk.dt(zeta, t);
      double prev_dt = (k >= 1) ? layers[static_cast<std::size_t>(k) - 1]->dt(zeta, t) : 0.0;
      int t1, t2;
      transverse_axes(e, t1, t2);
      double x1 = xi[static_cast<std::size_t>(t1)], x2 = xi[static_cast<std::size_t>(t2)];
      double divv = es.v_trans_div[0].eval({xe, x1, x2}) +
                    es.v_trans_div[1].eval({xe, x1, x2});
      double vL = es.v(es.length), v = es.v(xe), dv = es.dv(xe);
      double Lp = pt + dv * p + divv * p - (prev_dt + (v - vL) * pz) / eps_;
      res += epsk * (chb * Lp + p * v * dchb + 2.0 * es.a_axial * pz * dchb -
                     eps_ * es.a_axial * p * d2chb);
    }
  }
  return res;
}

double PartialSum::boundary_residual(int edge, double x_long, double theta, double t) const {
  const JunctionSpec& spec = *coeffs_->spec;
  const EdgeSpec& es = spec.edges[static_cast<std::size_t>(edge)];
  const double sgam = std::pow(eps_, cut_.gamma);
  const double h = es.h(x_long), dh = es.dh(x_long);
  const double sq = std::sqrt(1.0 + eps_ * eps_ * dh * dh);
  double x1 = h * std::cos(theta), x2 = h * std::sin(theta);
  double nu1 = std::cos(theta), nu2 = std::sin(theta);
  double v = es.v(x_long);
  double vb1 = es.v_trans[0].eval({x_long, x1, x2});
  double vb2 = es.v_trans[1].eval({x_long, x1, x2});
  double vbar_nu = vb1 * nu1 + vb2 * nu2;
  std::array<double, 3> xi{};
  xi[static_cast<std::size_t>(edge)] = x_long / eps_;
  int t1, t2;
  transverse_axes(edge, t1, t2);
  xi[static_cast<std::size_t>(t1)] = x1;
  xi[static_cast<std::size_t>(t2)] = x2;

  double B = 0.0, epsk = 1.0;
  double s = x_long / sgam;
  double ch = cut_.match(s);
  double dch = cut_.chi_match.d1(s) / sgam;
  for (int k = 0; k <= M_; ++k, epsk *= eps_) {
    const EdgeProfile& wp =
        *coeffs_->w[static_cast<std::size_t>(k)][static_cast<std::size_t>(edge)];
    double w = wp.value(x_long, t), wx = wp.dx(x_long, t);
    double uval = 0.0, ux = 0.0, rim = 0.0;
    if (k >= 1) {
      const auto& uf = coeffs_->u[static_cast<std::size_t>(k)][static_cast<std::size_t>(edge)];
      if (uf && !uf->empty()) {
        uval = uf->value(x_long, x1, x2, t);
        ux = uf->dx(x_long, x1, x2, t);
        rim = uf->rim_flux(x_long, theta, t);
      }
    }
    // Regular parts: diffusive axial + substituted transverse closure,
    // advective with the full velocity.
    double adv = ch * (w + uval) * (v * (-eps_ * dh) + eps_ * vbar_nu) / sq;
    double diff = eps_ * eps_ * dh * es.a_axial * (dch * (w + uval) + ch * (wx + ux)) / sq -
                  ch * rim / sq;
    B += epsk * (adv + diff);

    const NodeField& Nk = coeffs_->N[static_cast<std::size_t>(k)][0];
    if (!Nk.zero() && (1.0 - ch) != 0.0) {
      double g = Nk.value(xi, t);
      auto gg = Nk.grad(xi, t);
      double advN = (1.0 - ch) * g * (v * (-eps_ * dh) + eps_ * vbar_nu) / sq;
      double diffN = eps_ * eps_ * dh * es.a_axial *
                     (-dch * g + (1.0 - ch) * gg[static_cast<std::size_t>(edge)] / eps_) / sq;
      B += epsk * (advN + diffN);
    }

    const auto& layers = coeffs_->Pi[static_cast<std::size_t>(edge)];
    if (!layers.empty() && cut_.chi_base[static_cast<std::size_t>(edge)]) {
      const SmoothStep& cb = *cut_.chi_base[static_cast<std::size_t>(edge)];
      double chb = cb.value(x_long), dchb = cb.d1(x_long);
      if (chb != 0.0 || dchb != 0.0) {
        double zeta = (es.length - x_long) / eps_;
        const BoundaryLayerTerm& pk = *layers[static_cast<std::size_t>(k)];
        double p = pk.value(zeta, t);
        double pz = pk.dxi(zeta, t);
        double advP = chb * p * (v * (-eps_ * dh) + eps_ * vbar_nu) / sq;
        double diffP =
            eps_ * eps_ * dh * es.a_axial * (dchb * p - chb * pz / eps_) / sq;
        B += epsk * (advP + diffP);
      }
    }
  }
  B -= eps_ * es.phi.eval({x1, x2, x_long, t});
  return B;
}

}  // namespace junction
