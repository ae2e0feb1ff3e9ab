#include "junction/characteristics.hpp"

#include <cmath>
#include <stdexcept>

namespace junction {

double CharacteristicMap::V_inv(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= v_end_) return ell_;
  return vinv_.value(s);
}

CharacteristicMap build_characteristic(const ScalarFn1& Lambda, double ell, int n_grid,
                                       const QuadratureOptions& opt) {
  if (n_grid < 8) n_grid = 8;
  std::vector<double> y(static_cast<std::size_t>(n_grid) + 1), V(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = ell * static_cast<double>(i) / n_grid;
    double lam = Lambda(y[i]);
    if (!(lam > 0.0))
      throw std::invalid_argument("build_characteristic: Lambda must be strictly positive");
  }
  V[0] = 0.0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    double cell = integrate([&](double s) { return 1.0 / Lambda(s); }, y[i - 1], y[i], opt);
    V[i] = V[i - 1] + cell;
  }
  CharacteristicMap m;
  m.lambda_ = Lambda;
  m.ell_ = ell;
  m.v_end_ = V.back();
  m.v_ = Pchip(y, V);
  m.vinv_ = Pchip(V, y);
  return m;
}

bool MatchingReport::ok(double tol) const {
  if (q0 > tol || q1 > tol) return false;
  for (double r : higher)
    if (r > tol) return false;
  return true;
}

MatchingReport check_matching(const ScalarFn2& Psi, const ScalarFn1& q, int order) {
  if (order < 1) throw std::invalid_argument("check_matching: order >= 1 required");
  MatchingReport rep;
  rep.q0 = std::abs(q(0.0));
  const double h = 1e-6;
  // One-sided stencils at t=0 (q need not exist for t<0).
  auto d1 = [&](const ScalarFn1& f) {
    return (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
  };
  rep.q1 = std::abs(d1(q) - Psi(0.0, 0.0));
  for (int k = 2; k <= order; ++k) {
    // Flatness surrogate: forward difference of order k at 0.
    double s = 0.0;
    double hk = 5e-4;
    for (int j = 0; j <= k; ++j) {
      double binom = 1.0;
      for (int m = 0; m < j; ++m) binom = binom * (k - m) / (m + 1);
      s += ((k - j) % 2 ? -1.0 : 1.0) * binom * q(j * hk);
    }
    rep.higher.push_back(std::abs(s / std::pow(hk, k)));
  }
  return rep;
}

ModelSolution::ModelSolution(CharacteristicMap map, ScalarFn2 Psi, ScalarFn1 q, double T,
                             QuadratureOptions opt, bool matching_ok)
    : map_(std::move(map)),
      psi_(std::move(Psi)),
      q_(std::move(q)),
      T_(T),
      opt_(opt),
      matching_ok_(matching_ok) {}

double ModelSolution::eval(double y, double t) const {
  if (t <= 0.0) return 0.0;
  const double Vy = map_.V(y);
  if (t < Vy) {
    // Upstream of the leading characteristic: data still zero, the integral
    // runs along the characteristic through (y, t).
    return integrate(
        [&](double tau) { return psi_(map_.V_inv(tau + Vy - t), tau); }, 0.0, t, opt_);
  }
  double base = q_(t - Vy);
  double corr = integrate(
      [&](double eta) { return psi_(eta, map_.V(eta) + t - Vy) / map_.lambda(eta); }, 0.0, y,
      opt_);
  return base + corr;
}

ModelSolution solve_model(const ScalarFn1& Lambda, const ScalarFn2& Psi, const ScalarFn1& q,
                          double ell, double T, int n_grid, const QuadratureOptions& opt) {
  CharacteristicMap map = build_characteristic(Lambda, ell, n_grid, opt);
  MatchingReport rep = check_matching(Psi, q, 1);
  return ModelSolution(std::move(map), Psi, q, T, opt, rep.ok(1e-8));
}

}  // namespace junction
