#include "junction/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace junction {

namespace {

// K15 nodes/weights on [-1,1]; odd-indexed nodes form the embedded G7 rule.
constexpr double kXgk[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kWk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kWg[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

struct GK {
  double integral;
  double error;
};

GK gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double ik = 0.0, ig = 0.0;
  for (int i = 0; i < 15; ++i) {
    double v = f(c + h * kXgk[i]);
    ik += kWk[i] * v;
    if (i % 2 == 1) ig += kWg[i / 2] * v;
  }
  ik *= h;
  ig *= h;
  return {ik, std::abs(ik - ig)};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth, int max_depth) {
  GK r = gk15(f, a, b);
  if (r.error <= tol || depth >= max_depth) return r.integral;
  double c = 0.5 * (a + b);
  return adapt(f, a, c, 0.5 * tol, depth + 1, max_depth) +
         adapt(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  return sign * adapt(f, a, b, opt.abs_tol, 0, opt.max_depth);
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int n) {
  static const double x2[] = {-0.577350269189626, 0.577350269189626};
  static const double w2[] = {1.0, 1.0};
  static const double x3[] = {-0.774596669241483, 0.0, 0.774596669241483};
  static const double w3[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  static const double x4[] = {-0.861136311594053, -0.339981043584856, 0.339981043584856,
                              0.861136311594053};
  static const double w4[] = {0.347854845137454, 0.652145154862546, 0.652145154862546,
                              0.347854845137454};
  static const double x5[] = {-0.906179845938664, -0.538469310105683, 0.0,
                              0.538469310105683, 0.906179845938664};
  static const double w5[] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                              0.478628670499366, 0.236926885056189};
  static const double x8[] = {-0.960289856497536, -0.796666477413627, -0.525532409916329,
                              -0.183434642495650, 0.183434642495650,  0.525532409916329,
                              0.796666477413627,  0.960289856497536};
  static const double w8[] = {0.101228536290376, 0.222381034453374, 0.313706645877887,
                              0.362683783378362, 0.362683783378362, 0.313706645877887,
                              0.222381034453374, 0.101228536290376};
  static const double x16[] = {
      -0.989400934991650, -0.944575023073233, -0.865631202387832, -0.755404408355003,
      -0.617876244402644, -0.458016777657227, -0.281603550779259, -0.095012509837637,
      0.095012509837637,  0.281603550779259,  0.458016777657227,  0.617876244402644,
      0.755404408355003,  0.865631202387832,  0.944575023073233,  0.989400934991650};
  static const double w16[] = {
      0.027152459411754, 0.062253523938648, 0.095158511682493, 0.124628971255534,
      0.149595988816577, 0.169156519395003, 0.182603415044924, 0.189450610455069,
      0.189450610455069, 0.182603415044924, 0.169156519395003, 0.149595988816577,
      0.124628971255534, 0.095158511682493, 0.062253523938648, 0.027152459411754};

  const double* x = nullptr;
  const double* w = nullptr;
  switch (n) {
    case 2: x = x2; w = w2; break;
    case 3: x = x3; w = w3; break;
    case 4: x = x4; w = w4; break;
    case 5: x = x5; w = w5; break;
    case 8: x = x8; w = w8; break;
    case 16: x = x16; w = w16; break;
    default: throw std::invalid_argument("gauss_legendre: unsupported order");
  }
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w[i] * f(c + h * x[i]);
  return s * h;
}

}  // namespace junction
