#include "junction/boundary_layer.hpp"

#include <cmath>
#include <stdexcept>

namespace junction {

TimeFn TimeFn::from_expr(ExprFn f) {
  if (f.vars().size() != 1)
    throw std::invalid_argument("TimeFn::from_expr: expected a single-variable function");
  auto cache = std::make_shared<std::vector<ExprFn>>();
  cache->push_back(std::move(f));
  return TimeFn([cache](double t, int order) {
    while (static_cast<int>(cache->size()) <= order)
      cache->push_back(cache->front().derivative(cache->front().vars()[0],
                                                 static_cast<int>(cache->size())));
    return (*cache)[static_cast<std::size_t>(order)].eval({t});
  });
}

TimeFn TimeFn::from_profile(Profile1D p) {
  auto keep = std::make_shared<Profile1D>(std::move(p));
  return TimeFn([keep](double t, int order) { return keep->deriv(t, order); });
}

TimeFn TimeFn::from_profile2d(std::shared_ptr<const Profile2D> p, double x) {
  return TimeFn([p, x](double t, int order) {
    switch (order) {
      case 0: return p->value(x, t);
      case 1: return p->dt(x, t);
      case 2: return p->dt2(x, t);
      default: return p->dt3(x, t);
    }
  });
}

TimeFn TimeFn::combine(double a, TimeFn f, double b, TimeFn g) {
  auto fa = std::make_shared<TimeFn>(std::move(f));
  auto gb = std::make_shared<TimeFn>(std::move(g));
  return TimeFn([a, b, fa, gb](double t, int order) {
    return a * fa->deriv(t, order) + b * gb->deriv(t, order);
  });
}

double BoundaryLayerTerm::poly_coeff(int j, double t, int extra_deriv) const {
  if (j < 0 || j >= static_cast<int>(coeff_.size())) return 0.0;
  double acc = 0.0;
  for (const CoeffTerm& c : coeff_[static_cast<std::size_t>(j)])
    acc += c.alpha *
           (*phis_)[static_cast<std::size_t>(c.phi_index)].deriv(t, c.deriv + extra_deriv);
  return acc;
}

double BoundaryLayerTerm::value(double xi, double t) const {
  double p = 0.0;
  for (int j = degree(); j >= 0; --j) p = p * xi + poly_coeff(j, t);
  return p * std::exp(-lambda_ * xi);
}

double BoundaryLayerTerm::dxi(double xi, double t) const {
  double p = 0.0, dp = 0.0;
  for (int j = degree(); j >= 0; --j) {
    dp = dp * xi + p;
    p = p * xi + poly_coeff(j, t);
  }
  return (dp - lambda_ * p) * std::exp(-lambda_ * xi);
}

double BoundaryLayerTerm::dxi2(double xi, double t) const {
  double p = 0.0, dp = 0.0, d2p = 0.0;
  for (int j = degree(); j >= 0; --j) {
    d2p = d2p * xi + 2.0 * dp;
    dp = dp * xi + p;
    p = p * xi + poly_coeff(j, t);
  }
  return (d2p - 2.0 * lambda_ * dp + lambda_ * lambda_ * p) * std::exp(-lambda_ * xi);
}

double BoundaryLayerTerm::dt(double xi, double t) const {
  double p = 0.0;
  for (int j = degree(); j >= 0; --j) p = p * xi + poly_coeff(j, t, 1);
  return p * std::exp(-lambda_ * xi);
}

double BoundaryLayerTerm::ode_residual(double xi, double t,
                                       const BoundaryLayerTerm* prev) const {
  double rhs = prev ? prev->dt(xi, t) / a_ : 0.0;
  return dxi2(xi, t) + lambda_ * dxi(xi, t) - rhs;
}

BoundaryLayerTerm build_Pi0(const TimeFn& Phi0, double v, double a, int edge) {
  if (!(v > 0.0)) throw std::invalid_argument("build_Pi0: outlet speed must be positive");
  if (!(a > 0.0)) throw std::invalid_argument("build_Pi0: axial diffusion must be positive");
  BoundaryLayerTerm term;
  term.edge = edge;
  term.order = 0;
  term.lambda_ = v / a;
  term.a_ = a;
  term.phis_ = std::make_shared<std::vector<TimeFn>>();
  term.phis_->push_back(Phi0);
  term.coeff_.resize(1);
  term.coeff_[0].push_back({1.0, 0, 0});
  return term;
}

BoundaryLayerTerm recurse_Pi(const BoundaryLayerTerm& prev, const TimeFn& Phi_k) {
  BoundaryLayerTerm term;
  term.edge = prev.edge;
  term.order = prev.order + 1;
  term.lambda_ = prev.lambda_;
  term.a_ = prev.a_;
  term.phis_ = std::make_shared<std::vector<TimeFn>>(*prev.phis_);
  term.phis_->push_back(Phi_k);
  const int k = term.order;
  term.coeff_.assign(static_cast<std::size_t>(k) + 1, {});

  // Source coefficients: q_j = (d/dt) prev coefficient j, so each CoeffTerm
  // of prev reappears with one more derivative.
  auto qdot = [&prev](int j) {
    std::vector<BoundaryLayerTerm::CoeffTerm> out;
    if (j < 0 || j >= static_cast<int>(prev.coeff_.size())) return out;
    out = prev.coeff_[static_cast<std::size_t>(j)];
    for (auto& c : out) c.deriv += 1;
    return out;
  };

  const double lam = term.lambda_, a = term.a_;
  // In the polynomial ring the ansatz reduces the ODE to P'' - lam P' =
  // (1/a) Qdot; matching xi^j terms gives
  //   c_{j+1} = [ (j+2)(j+1) c_{j+2} - qdot_j / a ] / (lam (j+1)),
  // marched downward from j = k-1 with c_{k+1} = 0.
  for (int j = k - 1; j >= 0; --j) {
    auto& target = term.coeff_[static_cast<std::size_t>(j) + 1];
    double scale = 1.0 / (lam * (j + 1));
    for (auto c : qdot(j)) {
      c.alpha *= -scale / a;
      target.push_back(c);
    }
    if (j + 2 <= k) {
      for (auto c : term.coeff_[static_cast<std::size_t>(j) + 2]) {
        c.alpha *= scale * (j + 2) * (j + 1);
        target.push_back(c);
      }
    }
  }
  term.coeff_[0].push_back({1.0, k, 0});
  return term;
}

}  // namespace junction
