#pragma once

#include <functional>

namespace junction {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 30;
};

/// Adaptive Gauss–Kronrod (G7,K15) on [a,b]. Bisects until the local
/// Kronrod error estimate meets the depth-shared absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt = {});

/// Fixed-order Gauss–Legendre on [a,b] (n in {2..8,16}).
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int n);

}  // namespace junction
