#pragma once

#include <memory>
#include <vector>

#include "junction/expr.hpp"
#include "junction/interp.hpp"

namespace junction {

/// A function of time with derivative access; backed by an expression, a
/// spline profile, or a linear combination.
class TimeFn {
 public:
  TimeFn() : fn_([](double, int) { return 0.0; }) {}

  static TimeFn from_expr(ExprFn f);
  static TimeFn from_profile(Profile1D p);
  /// Trace of a 2D profile at fixed x, sharing its interpolation path so
  /// that profile-vs-layer cancellations are exact.
  static TimeFn from_profile2d(std::shared_ptr<const Profile2D> p, double x);
  static TimeFn combine(double a, TimeFn f, double b, TimeFn g);

  double operator()(double t) const { return fn_(t, 0); }
  double deriv(double t, int order) const { return fn_(t, order); }

 private:
  explicit TimeFn(std::function<double(double, int)> fn) : fn_(std::move(fn)) {}
  std::function<double(double, int)> fn_;
};

/// Pi_k at an outlet base: (sum_j p_{k,j}(t) xi^j) e^{-lambda xi} with
/// lambda = v/a > 0. The polynomial coefficients are exact linear
/// combinations of time derivatives of the base mismatches Phi_0..Phi_k.
class BoundaryLayerTerm {
 public:
  int edge = 2;
  int order = 0;

  double lambda() const { return lambda_; }
  double axial_diffusion() const { return a_; }
  int degree() const { return static_cast<int>(coeff_.size()) - 1; }

  /// Polynomial coefficient p_j d^extra/dt^extra evaluated at t.
  double poly_coeff(int j, double t, int extra_deriv = 0) const;

  double value(double xi, double t) const;
  double dxi(double xi, double t) const;
  double dxi2(double xi, double t) const;
  double dt(double xi, double t) const;

  /// Residual of the defining ODE P'' + lambda P' = (1/a) dPi_{k-1}/dt at a
  /// sample point (zero for the base term's homogeneous equation).
  double ode_residual(double xi, double t, const BoundaryLayerTerm* prev) const;

  friend BoundaryLayerTerm build_Pi0(const TimeFn& Phi0, double v, double a, int edge);
  friend BoundaryLayerTerm recurse_Pi(const BoundaryLayerTerm& prev, const TimeFn& Phi_k);

 private:
  struct CoeffTerm {
    double alpha;
    int phi_index;
    int deriv;
  };
  double lambda_ = 1.0;
  double a_ = 1.0;
  std::vector<std::vector<CoeffTerm>> coeff_;           // per power j
  std::shared_ptr<std::vector<TimeFn>> phis_;           // Phi_0..Phi_k
};

/// Pi_0 = Phi_0(t) e^{-(v/a) xi}; requires v > 0 and a > 0.
BoundaryLayerTerm build_Pi0(const TimeFn& Phi0, double v, double a, int edge = 2);

/// Solves P'' + lambda P' = (1/a) dPi_prev/dt in the polynomial ring,
/// excluding the non-decaying homogeneous mode and fixing P(0) = Phi_k.
/// The degree rises by exactly one.
BoundaryLayerTerm recurse_Pi(const BoundaryLayerTerm& prev, const TimeFn& Phi_k);

inline double eval_Pi(const BoundaryLayerTerm& term, double xi, double t) {
  return term.value(xi, t);
}

}  // namespace junction
