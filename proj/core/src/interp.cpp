#include "junction/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace junction {

std::vector<double> chebyshev_points(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("chebyshev_points: n >= 1 required");
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    double c = std::cos(M_PI * static_cast<double>(j) / n);
    x[static_cast<std::size_t>(n - j)] = a + 0.5 * (b - a) * (1.0 + c);
  }
  x.front() = a;
  x.back() = b;
  return x;
}

std::vector<double> chebyshev_diff_matrix(const std::vector<double>& pts) {
  const std::size_t m = pts.size();
  std::vector<double> c(m, 1.0);
  c.front() = 2.0;
  c.back() = 2.0;
  std::vector<double> D(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      double sgn = (((i + j) % 2) == 0) ? 1.0 : -1.0;
      double v = (c[i] / c[j]) * sgn / (pts[i] - pts[j]);
      D[i * m + j] = v;
      rowsum += v;
    }
    D[i * m + i] = -rowsum;
  }
  return D;
}

// ---------------------------------------------------------------------------
// CubicSpline (not-a-knot)
// ---------------------------------------------------------------------------

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("CubicSpline: bad sizes");
  x_ = std::move(x);
  const std::vector<double>& yy = y;

  if (n == 2) {
    a_ = {yy[0]};
    b_ = {(yy[1] - yy[0]) / (x_[1] - x_[0])};
    c_ = {0.0};
    d_ = {0.0};
    return;
  }
  if (n == 3) {
    // Single quadratic through three points.
    double h0 = x_[1] - x_[0], h1 = x_[2] - x_[1];
    double s0 = (yy[1] - yy[0]) / h0, s1 = (yy[2] - yy[1]) / h1;
    double c2 = (s1 - s0) / (h0 + h1);
    a_.assign(2, 0.0);
    b_.assign(2, 0.0);
    c_.assign(2, 0.0);
    d_.assign(2, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
      double dx0 = x_[i] - x_[0];
      a_[i] = yy[0] + dx0 * (s0 + c2 * (x_[i] - x_[1]));
      b_[i] = s0 + c2 * (2.0 * dx0 - h0);
      c_[i] = c2;
      d_[i] = 0.0;
    }
    return;
  }

  // Solve for second derivatives M_i with not-a-knot end conditions. The
  // system is tridiagonal except the first/last rows (three entries each);
  // banded Gaussian elimination with partial pivoting keeps it robust on
  // uniform grids where the corner rows have a zero leading entry.
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];

  std::vector<double> r(n, 0.0);
  std::vector<double> M(n, 0.0);
  {
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
    rows[0][0] = h[1];
    rows[0][1] = -(h[0] + h[1]);
    rows[0][2] = h[0];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      rows[i][i - 1] = h[i - 1];
      rows[i][i] = 2.0 * (h[i - 1] + h[i]);
      rows[i][i + 1] = h[i];
      r[i] = 6.0 * ((yy[i + 1] - yy[i]) / h[i] - (yy[i] - yy[i - 1]) / h[i - 1]);
    }
    rows[n - 1][n - 3] = h[n - 2];
    rows[n - 1][n - 2] = -(h[n - 3] + h[n - 2]);
    rows[n - 1][n - 1] = h[n - 3];
    std::vector<double> rhs = r;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < std::min(k + 3, n); ++i)
        if (std::abs(rows[i][k]) > std::abs(rows[piv][k])) piv = i;
      std::swap(rows[k], rows[piv]);
      std::swap(rhs[k], rhs[piv]);
      double p = rows[k][k];
      for (std::size_t i = k + 1; i < std::min(k + 3, n); ++i) {
        if (rows[i][k] == 0.0) continue;
        double f = rows[i][k] / p;
        std::size_t jmax = std::min(k + 6, n);
        for (std::size_t j = k; j < jmax; ++j) rows[i][j] -= f * rows[k][j];
        rhs[i] -= f * rhs[k];
      }
    }
    for (std::size_t k = n; k-- > 0;) {
      double s = rhs[k];
      std::size_t jmax = std::min(k + 6, n);
      for (std::size_t j = k + 1; j < jmax; ++j) s -= rows[k][j] * M[j];
      M[k] = s / rows[k][k];
    }
  }

  a_.resize(n - 1);
  b_.resize(n - 1);
  c_.resize(n - 1);
  d_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    a_[i] = yy[i];
    b_[i] = (yy[i + 1] - yy[i]) / h[i] - h[i] * (2.0 * M[i] + M[i + 1]) / 6.0;
    c_[i] = M[i] / 2.0;
    d_[i] = (M[i + 1] - M[i]) / (6.0 * h[i]);
  }
}

std::size_t CubicSpline::find(double x) const {
  std::size_t hi = a_.size() - 1;
  if (x <= x_[1]) return 0;
  if (x >= x_[x_.size() - 2]) return hi;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  return std::min(std::max<std::size_t>(i, 1) - 1, hi);
}

double CubicSpline::value(double x) const {
  std::size_t i = find(x);
  double s = x - x_[i];
  return a_[i] + s * (b_[i] + s * (c_[i] + s * d_[i]));
}

double CubicSpline::deriv(double x) const {
  std::size_t i = find(x);
  double s = x - x_[i];
  return b_[i] + s * (2.0 * c_[i] + 3.0 * s * d_[i]);
}

double CubicSpline::deriv2(double x) const {
  std::size_t i = find(x);
  double s = x - x_[i];
  return 2.0 * c_[i] + 6.0 * s * d_[i];
}

double CubicSpline::deriv3(double x) const { return 6.0 * d_[find(x)]; }

// ---------------------------------------------------------------------------
// Pchip
// ---------------------------------------------------------------------------

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n < 2) throw std::invalid_argument("Pchip: bad sizes");
  m_.assign(n, 0.0);
  std::vector<double> h(n - 1), del(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    del[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  if (n == 2) {
    m_[0] = m_[1] = del[0];
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (del[i - 1] * del[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        double w1 = 2.0 * h[i] + h[i - 1];
        double w2 = h[i] + 2.0 * h[i - 1];
        m_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (m * d0 <= 0.0) m = 0.0;
      else if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) m = 3.0 * d0;
      return m;
    };
    m_[0] = end_slope(h[0], h[1], del[0], del[1]);
    m_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  }
}

std::size_t Pchip::find(double x) const {
  if (x <= x_[1]) return 0;
  if (x >= x_[x_.size() - 2]) return x_.size() - 2;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return std::min(static_cast<std::size_t>(it - x_.begin()) - 1, x_.size() - 2);
}

double Pchip::value(double x) const {
  std::size_t i = find(x);
  double h = x_[i + 1] - x_[i];
  double s = (x - x_[i]) / h;
  double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  double h10 = s * (1.0 - s) * (1.0 - s);
  double h01 = s * s * (3.0 - 2.0 * s);
  double h11 = s * s * (s - 1.0);
  return h00 * y_[i] + h * h10 * m_[i] + h01 * y_[i + 1] + h * h11 * m_[i + 1];
}

double Pchip::deriv(double x) const {
  std::size_t i = find(x);
  double h = x_[i + 1] - x_[i];
  double s = (x - x_[i]) / h;
  double d00 = 6.0 * s * (s - 1.0) / h;
  double d10 = (1.0 - s) * (1.0 - 3.0 * s);
  double d01 = -d00;
  double d11 = s * (3.0 * s - 2.0);
  return d00 * y_[i] + d10 * m_[i] + d01 * y_[i + 1] + d11 * m_[i + 1];
}

// ---------------------------------------------------------------------------
// Profile2D
// ---------------------------------------------------------------------------

namespace {

struct TLocal {
  std::size_t i0;
  double w[4];
};

TLocal t_local(const std::vector<double>& tn, double t, int deriv) {
  TLocal out{};
  const std::size_t n = tn.size();
  if (n < 4) {
    out.i0 = 0;
    if (deriv == 0 && n >= 2) {
      double s = (t - tn.front()) / (tn.back() - tn.front());
      out.w[0] = 1 - s;
      out.w[n - 1] += s;
    } else if (deriv == 1 && n >= 2) {
      double d = tn.back() - tn.front();
      out.w[0] = -1.0 / d;
      out.w[n - 1] += 1.0 / d;
    }
    return out;
  }
  double dt = tn[1] - tn[0];
  long cell = static_cast<long>(std::floor((t - tn[0]) / dt));
  cell = std::max(0L, std::min(static_cast<long>(n) - 2, cell));
  long first = std::max(0L, std::min(static_cast<long>(n) - 4, cell - 1));
  out.i0 = static_cast<std::size_t>(first);
  double nodes[4];
  for (int j = 0; j < 4; ++j) nodes[j] = tn[out.i0 + static_cast<std::size_t>(j)];
  for (int j = 0; j < 4; ++j) {
    double prod = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) prod *= nodes[j] - nodes[m];
    double v = 0.0;
    if (deriv == 0) {
      v = 1.0;
      for (int m = 0; m < 4; ++m)
        if (m != j) v *= (t - nodes[m]);
    } else if (deriv == 1) {
      for (int m = 0; m < 4; ++m) {
        if (m == j) continue;
        double term = 1.0;
        for (int p = 0; p < 4; ++p)
          if (p != j && p != m) term *= (t - nodes[p]);
        v += term;
      }
    } else if (deriv == 2) {
      for (int m = 0; m < 4; ++m) {
        if (m == j) continue;
        for (int p = 0; p < 4; ++p) {
          if (p == j || p == m) continue;
          double term = 1.0;
          for (int r = 0; r < 4; ++r)
            if (r != j && r != m && r != p) term *= (t - nodes[r]);
          v += term;
        }
      }
    } else {
      v = 6.0;  // third derivative of the local cubic
      for (int m = 0; m < 4; ++m)
        if (m != j) v *= 1.0;
    }
    out.w[j] = v / prod;
  }
  return out;
}

}  // namespace

Profile2D Profile2D::build(int nx, double xa, double xb, int nt, double ta, double tb,
                           const std::function<double(double, double)>& f) {
  std::vector<double> xs(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i)
    xs[static_cast<std::size_t>(i)] = xa + (xb - xa) * static_cast<double>(i) / (nx - 1);
  std::vector<double> ts(static_cast<std::size_t>(nt));
  for (int j = 0; j < nt; ++j)
    ts[static_cast<std::size_t>(j)] = ta + (tb - ta) * static_cast<double>(j) / (nt - 1);
  std::vector<double> vals(xs.size() * ts.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j) vals[i * ts.size() + j] = f(xs[i], ts[j]);
  return from_values(std::move(xs), std::move(ts), std::move(vals));
}

Profile2D Profile2D::from_values(std::vector<double> xnodes, std::vector<double> tnodes,
                                 std::vector<double> vals) {
  Profile2D p;
  p.xn_ = std::move(xnodes);
  p.tn_ = std::move(tnodes);
  p.vals_ = std::move(vals);
  const std::size_t nx = p.xn_.size(), nt = p.tn_.size();
  if (p.vals_.size() != nx * nt) throw std::invalid_argument("Profile2D: bad value count");
  p.xspline_.reserve(nt);
  std::vector<double> col(nx);
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t i = 0; i < nx; ++i) col[i] = p.vals_[i * nt + j];
    p.xspline_.emplace_back(p.xn_, col);
  }
  return p;
}

double Profile2D::combine(double x, double t, int xderiv, int tderiv) const {
  TLocal tl = t_local(tn_, t, tderiv);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    double w = tl.w[j];
    if (w == 0.0) continue;
    std::size_t idx = tl.i0 + static_cast<std::size_t>(j);
    if (idx >= xspline_.size()) continue;
    const CubicSpline& s = xspline_[idx];
    double v;
    switch (xderiv) {
      case 0: v = s.value(x); break;
      case 1: v = s.deriv(x); break;
      case 2: v = s.deriv2(x); break;
      default: v = s.deriv3(x); break;
    }
    acc += w * v;
  }
  return acc;
}

double Profile2D::value(double x, double t) const { return combine(x, t, 0, 0); }
double Profile2D::dx(double x, double t) const { return combine(x, t, 1, 0); }
double Profile2D::dxx(double x, double t) const { return combine(x, t, 2, 0); }
double Profile2D::dx3(double x, double t) const { return combine(x, t, 3, 0); }
double Profile2D::dt(double x, double t) const { return combine(x, t, 0, 1); }
double Profile2D::dt2(double x, double t) const { return combine(x, t, 0, 2); }
double Profile2D::dt3(double x, double t) const { return combine(x, t, 0, 3); }
double Profile2D::dxdt(double x, double t) const { return combine(x, t, 1, 1); }

// ---------------------------------------------------------------------------
// Profile1D
// ---------------------------------------------------------------------------

Profile1D Profile1D::build(int nt, double ta, double tb, const std::function<double(double)>& f) {
  std::vector<double> ts(static_cast<std::size_t>(nt)), vs(static_cast<std::size_t>(nt));
  for (int j = 0; j < nt; ++j) {
    ts[static_cast<std::size_t>(j)] = ta + (tb - ta) * static_cast<double>(j) / (nt - 1);
    vs[static_cast<std::size_t>(j)] = f(ts[static_cast<std::size_t>(j)]);
  }
  return from_values(std::move(ts), std::move(vs));
}

Profile1D Profile1D::from_values(std::vector<double> tnodes, std::vector<double> vals) {
  Profile1D p;
  p.tn_ = tnodes;
  p.s_ = CubicSpline(std::move(tnodes), std::move(vals));
  return p;
}

double Profile1D::deriv(double t, int order) const {
  if (order == 0) return s_.value(t);
  if (order == 1) return s_.deriv(t);
  if (order == 2) return s_.deriv2(t);
  if (order == 3) return s_.deriv3(t);
  throw std::invalid_argument("Profile1D: derivative order > 3 unsupported");
}

}  // namespace junction
