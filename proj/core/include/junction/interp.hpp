#pragma once

#include <functional>
#include <vector>

namespace junction {

/// Chebyshev–Gauss–Lobatto points on [a,b], ascending order, n+1 points.
std::vector<double> chebyshev_points(int n, double a, double b);

/// Dense spectral differentiation matrix (row-major, (n+1)^2) for the points
/// returned by chebyshev_points; uses the negative-sum trick on the diagonal.
std::vector<double> chebyshev_diff_matrix(const std::vector<double>& pts);

/// Not-a-knot cubic spline on an ascending grid (>= 4 points; 2-3 points fall
/// back to polynomial interpolation).
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double deriv(double x) const;
  double deriv2(double x) const;
  double deriv3(double x) const;  // piecewise constant

 private:
  std::vector<double> x_, a_, b_, c_, d_;  // per-interval cubic a+b*s+c*s^2+d*s^3
  std::size_t find(double x) const;
};

/// Monotone cubic interpolant (Fritsch–Carlson); never overshoots the data.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double deriv(double x) const;

 private:
  std::vector<double> x_, y_, m_;
  std::size_t find(double x) const;
};

/// Scalar field f(x,t) tabulated on uniform grids, represented by not-a-knot
/// cubic splines in x (one per t node) combined with a local cubic in t.
/// Local interpolation keeps exact zeros exact: values and derivatives
/// vanish identically on dead zones where the nodal data do.
class Profile2D {
 public:
  Profile2D() = default;

  static Profile2D build(int nx, double xa, double xb, int nt, double ta, double tb,
                         const std::function<double(double, double)>& f);
  static Profile2D from_values(std::vector<double> xnodes, std::vector<double> tnodes,
                               std::vector<double> vals /* [ix*nt + it] */);

  double value(double x, double t) const;
  double dx(double x, double t) const;
  double dxx(double x, double t) const;
  double dx3(double x, double t) const;
  double dt(double x, double t) const;
  double dt2(double x, double t) const;
  double dt3(double x, double t) const;
  double dxdt(double x, double t) const;

  const std::vector<double>& x_nodes() const { return xn_; }
  const std::vector<double>& t_nodes() const { return tn_; }
  double node_value(std::size_t ix, std::size_t it) const { return vals_[ix * tn_.size() + it]; }
  bool valid() const { return !xn_.empty(); }

 private:
  double combine(double x, double t, int xderiv, int tderiv) const;

  std::vector<double> xn_, tn_;
  std::vector<double> vals_;            // [ix*nt + it]
  std::vector<CubicSpline> xspline_;    // per t node, over x
};

/// Smooth function of t on a uniform grid with spline derivatives.
class Profile1D {
 public:
  Profile1D() = default;
  static Profile1D build(int nt, double ta, double tb, const std::function<double(double)>& f);
  static Profile1D from_values(std::vector<double> tnodes, std::vector<double> vals);

  double value(double t) const { return s_.value(t); }
  double deriv(double t, int order = 1) const;
  const std::vector<double>& t_nodes() const { return tn_; }
  bool valid() const { return !tn_.empty(); }

 private:
  std::vector<double> tn_;
  CubicSpline s_;
};

}  // namespace junction
