#pragma once

#include <functional>

#include "junction/functions.hpp"
#include "junction/interp.hpp"
#include "junction/quadrature.hpp"

namespace junction {

/// Table of the characteristic time V(y) = int_0^y dxi / Lambda(xi) and its
/// inverse, for a strictly positive transport speed Lambda on [0, l].
class CharacteristicMap {
 public:
  CharacteristicMap() = default;

  double V(double y) const { return v_.value(y); }
  double V_inv(double s) const;
  double length() const { return ell_; }
  double V_end() const { return v_end_; }
  double lambda(double y) const { return lambda_(y); }

  friend CharacteristicMap build_characteristic(const ScalarFn1& Lambda, double ell, int n_grid,
                                                const QuadratureOptions& opt);

 private:
  Pchip v_, vinv_;
  ScalarFn1 lambda_;
  double ell_ = 0.0;
  double v_end_ = 0.0;
};

/// Builds the characteristic table with per-cell adaptive Gauss-Kronrod
/// quadrature and monotone cubic interpolation for V and its inverse.
/// Rejects nonpositive Lambda samples.
CharacteristicMap build_characteristic(const ScalarFn1& Lambda, double ell, int n_grid,
                                       const QuadratureOptions& opt = {});

struct MatchingReport {
  double q0 = 0.0;           // |q(0)|
  double q1 = 0.0;           // |q'(0) - Psi(0,0)|
  std::vector<double> higher;  // flatness residuals for orders 2..order
  bool ok(double tol = 1e-10) const;
};

/// Residuals of the matching conditions for the model mixed problem; q' and
/// higher t-derivatives by central differences of the supplied callables.
MatchingReport check_matching(const ScalarFn2& Psi, const ScalarFn1& q, int order);

/// Exact solution of  dU/dt + Lambda(y) dU/dy = Psi(y, t),  U(0,t) = q(t),
/// U(y,0) = 0  by the first-integral representation. Points on the
/// characteristic t = V(y) evaluate the downstream (D2) branch.
class ModelSolution {
 public:
  ModelSolution() = default;
  ModelSolution(CharacteristicMap map, ScalarFn2 Psi, ScalarFn1 q, double T,
                QuadratureOptions opt = {}, bool matching_ok = true);

  double eval(double y, double t) const;
  bool in_upstream_region(double y, double t) const { return t < map_.V(y); }
  const CharacteristicMap& characteristic() const { return map_; }
  bool matching_flag() const { return matching_ok_; }

 private:
  CharacteristicMap map_;
  ScalarFn2 psi_;
  ScalarFn1 q_;
  double T_ = 0.0;
  QuadratureOptions opt_;
  bool matching_ok_ = true;
};

/// Convenience: build + matching check in one call. A failed matching check
/// only flags the solution; evaluation stays permitted.
ModelSolution solve_model(const ScalarFn1& Lambda, const ScalarFn2& Psi, const ScalarFn1& q,
                          double ell, double T, int n_grid = 1024,
                          const QuadratureOptions& opt = {});

}  // namespace junction
