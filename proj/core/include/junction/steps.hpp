#pragma once

namespace junction {

/// C^2 quintic smoothstep on [a,b]: 0 below a, 1 above b, monotone between.
struct SmoothStep {
  double a = 0.0, b = 1.0;

  double value(double x) const {
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    double s = (x - a) / (b - a);
    return ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
  }
  double d1(double x) const {
    if (x <= a || x >= b) return 0.0;
    double w = b - a, s = (x - a) / w;
    return (((30.0 * s - 60.0) * s + 30.0) * s * s) / w;
  }
  double d2(double x) const {
    if (x <= a || x >= b) return 0.0;
    double w = b - a, s = (x - a) / w;
    return (((120.0 * s - 180.0) * s + 60.0) * s) / (w * w);
  }
};

}  // namespace junction
