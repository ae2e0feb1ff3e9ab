#include "junction/disk_cell.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace junction {

namespace {

constexpr double kClusterRatio = 0.93;  // radial width ratio toward the rim

const double kGauss3x[3] = {-0.774596669241483, 0.0, 0.774596669241483};
const double kGauss3w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// Quadratic Lagrange basis on three nodes.
inline void lagrange3(double x, const double n[3], double* L, double* dL) {
  double d01 = n[0] - n[1], d02 = n[0] - n[2], d12 = n[1] - n[2];
  L[0] = (x - n[1]) * (x - n[2]) / (d01 * d02);
  L[1] = (x - n[0]) * (x - n[2]) / (-d01 * d12);
  L[2] = (x - n[0]) * (x - n[1]) / (d02 * d12);
  dL[0] = ((x - n[1]) + (x - n[2])) / (d01 * d02);
  dL[1] = ((x - n[0]) + (x - n[2])) / (-d01 * d12);
  dL[2] = ((x - n[0]) + (x - n[1])) / (d02 * d12);
}

// Uniform-grid local cubic interpolation over one time axis.
struct TimeStencil {
  std::size_t i0;
  double w[4], dw[4], d2w[4];
};

TimeStencil time_stencil(const std::vector<double>& tn, double t) {
  TimeStencil st{};
  const std::size_t n = tn.size();
  double dt = tn[1] - tn[0];
  double s = (t - tn[0]) / dt;
  long cell = static_cast<long>(std::floor(s));
  cell = std::max(0L, std::min(static_cast<long>(n) - 2, cell));
  long first = std::max(0L, std::min(static_cast<long>(n) - 4, cell - 1));
  st.i0 = static_cast<std::size_t>(first);
  double nodes[4];
  for (int j = 0; j < 4; ++j) nodes[j] = tn[st.i0 + static_cast<std::size_t>(j)];
  for (int j = 0; j < 4; ++j) {
    double L = 1.0, dL = 0.0, d2L = 0.0;
    // Build Lagrange value/derivatives directly.
    double prod = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) prod *= nodes[j] - nodes[m];
    // value
    L = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) L *= (t - nodes[m]);
    L /= prod;
    // first derivative
    dL = 0.0;
    for (int m = 0; m < 4; ++m) {
      if (m == j) continue;
      double term = 1.0;
      for (int p = 0; p < 4; ++p)
        if (p != j && p != m) term *= (t - nodes[p]);
      dL += term;
    }
    dL /= prod;
    // second derivative
    d2L = 0.0;
    for (int m = 0; m < 4; ++m) {
      if (m == j) continue;
      for (int p = 0; p < 4; ++p) {
        if (p == j || p == m) continue;
        double term = 1.0;
        for (int r = 0; r < 4; ++r)
          if (r != j && r != m && r != p) term *= (t - nodes[r]);
        d2L += term;
      }
    }
    d2L /= prod;
    st.w[j] = L;
    st.dw[j] = dL;
    st.d2w[j] = d2L;
  }
  return st;
}

// Local cubic Lagrange weights on the uniform station grid (locality keeps
// exact zeros exact across dead zones).
TimeStencil station_stencil(const std::vector<double>& xn, double x, int deriv) {
  TimeStencil st = time_stencil(xn, x);
  if (deriv == 1) {
    for (int j = 0; j < 4; ++j) st.w[j] = st.dw[j];
  }
  return st;
}

}  // namespace

// ---------------------------------------------------------------------------
// DiskSolver
// ---------------------------------------------------------------------------

int DiskSolver::dof_index(int j, int m) const {
  if (j == 0) return 0;
  int M = 2 * nt_;
  int mm = ((m % M) + M) % M;
  return 1 + (j - 1) * M + mm;
}

DiskSolver::DiskSolver(double radius, int nr, int ntheta, Coeff a11, Coeff a12, Coeff a22)
    : h_(radius), nr_(nr), nt_(ntheta) {
  if (nr_ < 2 || nt_ < 4) throw std::invalid_argument("DiskSolver: mesh too coarse");
  redge_.resize(static_cast<std::size_t>(nr_) + 1);
  redge_[0] = 0.0;
  double wsum = 0.0, w = 1.0;
  for (int i = 0; i < nr_; ++i, w *= kClusterRatio) wsum += w;
  w = 1.0;
  for (int i = 0; i < nr_; ++i, w *= kClusterRatio)
    redge_[static_cast<std::size_t>(i) + 1] = redge_[static_cast<std::size_t>(i)] + h_ * w / wsum;
  redge_.back() = h_;
  rnode_.resize(2 * static_cast<std::size_t>(nr_) + 1);
  for (int i = 0; i < nr_; ++i) {
    rnode_[2 * static_cast<std::size_t>(i)] = redge_[static_cast<std::size_t>(i)];
    rnode_[2 * static_cast<std::size_t>(i) + 1] =
        0.5 * (redge_[static_cast<std::size_t>(i)] + redge_[static_cast<std::size_t>(i) + 1]);
  }
  rnode_.back() = h_;
  n_dof_ = 1 + 2 * nr_ * 2 * nt_;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nr_) * nt_ * 81);
  mass_ = Eigen::VectorXd::Zero(n_dof_);

  const double dth = 2.0 * M_PI / nt_;
  double N[9], dNr[9], dNth[9];
  int dofs[9];

  for (int i = 0; i < nr_; ++i) {
    for (int a = 0; a < nt_; ++a) {
      double r0 = redge_[static_cast<std::size_t>(i)], r1 = redge_[static_cast<std::size_t>(i) + 1];
      double t0 = a * dth;
      double Ke[9][9] = {};
      double Me[9] = {};
      int nloc = (i == 0) ? 7 : 9;
      for (int gr = 0; gr < 3; ++gr) {
        double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * kGauss3x[gr];
        double wr = 0.5 * (r1 - r0) * kGauss3w[gr];
        for (int gt = 0; gt < 3; ++gt) {
          double th = t0 + 0.5 * dth + 0.5 * dth * kGauss3x[gt];
          double wt = 0.5 * dth * kGauss3w[gt];
          basis(i, a, r, th, N, dNr, dNth, dofs);
          double x1 = r * std::cos(th), x2 = r * std::sin(th);
          double d11 = a11(x1, x2), d12 = a12(x1, x2), d22 = a22(x1, x2);
          double ct = std::cos(th), st = std::sin(th);
          double wq = wr * wt * r;
          for (int p = 0; p < nloc; ++p) {
            double gpr = dNr[p], gpt = dNth[p] / r;
            double gx = gpr * ct - gpt * st;
            double gy = gpr * st + gpt * ct;
            double Dgx = d11 * gx + d12 * gy;
            double Dgy = d12 * gx + d22 * gy;
            Me[p] += wq * N[p];
            for (int q = 0; q < nloc; ++q) {
              double hqr = dNr[q], hqt = dNth[q] / r;
              double hx = hqr * ct - hqt * st;
              double hy = hqr * st + hqt * ct;
              Ke[p][q] += wq * (Dgx * hx + Dgy * hy);
            }
          }
        }
      }
      basis(i, a, 0.5 * (r0 + r1), t0 + 0.5 * dth, N, dNr, dNth, dofs);  // dofs only
      for (int p = 0; p < nloc; ++p) {
        mass_[dofs[p]] += Me[p];
        for (int q = 0; q < nloc; ++q)
          trips.emplace_back(dofs[p], dofs[q], Ke[p][q]);
      }
    }
  }

  K_.resize(n_dof_, n_dof_);
  K_.setFromTriplets(trips.begin(), trips.end());

  // Pin the center DOF to fix the constant null space.
  for (int k = 0; k < K_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K_, k); it; ++it) {
      if (it.row() == 0 || it.col() == 0) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    }
  K_.prune(0.0);
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(K_);
  if (ldlt_->info() != Eigen::Success)
    throw std::runtime_error("DiskSolver: factorization failed");
}

void DiskSolver::basis(int i, int a, double r, double th, double* N, double* dNr, double* dNth,
                       int* dofs) const {
  double rn[3] = {rnode_[2 * static_cast<std::size_t>(i)],
                  rnode_[2 * static_cast<std::size_t>(i) + 1],
                  rnode_[2 * static_cast<std::size_t>(i) + 2]};
  const double dth = 2.0 * M_PI / nt_;
  double tn[3] = {a * dth, (a + 0.5) * dth, (a + 1.0) * dth};
  double Lr[3], dLr[3], Lt[3], dLt[3];
  lagrange3(r, rn, Lr, dLr);
  double thw = th;
  // Angular coordinate relative to the element (handles wrap-around).
  if (thw < tn[0] - 1e-9) thw += 2.0 * M_PI;
  lagrange3(thw, tn, Lt, dLt);

  if (i == 0) {
    N[0] = Lr[0];
    dNr[0] = dLr[0];
    dNth[0] = 0.0;
    dofs[0] = 0;
    int c = 1;
    for (int p = 1; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        N[c] = Lr[p] * Lt[q];
        dNr[c] = dLr[p] * Lt[q];
        dNth[c] = Lr[p] * dLt[q];
        dofs[c] = dof_index(p, 2 * a + q);
        ++c;
      }
    }
  } else {
    int c = 0;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        N[c] = Lr[p] * Lt[q];
        dNr[c] = dLr[p] * Lt[q];
        dNth[c] = Lr[p] * dLt[q];
        dofs[c] = dof_index(2 * i + p, 2 * a + q);
        ++c;
      }
    }
  }
}

Eigen::VectorXd DiskSolver::assemble_load(const std::function<double(double, double)>& f_xi,
                                          const std::function<double(double)>& g_of_theta) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_dof_);
  const double dth = 2.0 * M_PI / nt_;
  double N[9], dNr[9], dNth[9];
  int dofs[9];
  for (int i = 0; i < nr_; ++i) {
    double r0 = redge_[static_cast<std::size_t>(i)], r1 = redge_[static_cast<std::size_t>(i) + 1];
    for (int a = 0; a < nt_; ++a) {
      int nloc = (i == 0) ? 7 : 9;
      for (int gr = 0; gr < 3; ++gr) {
        double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * kGauss3x[gr];
        double wr = 0.5 * (r1 - r0) * kGauss3w[gr];
        for (int gt = 0; gt < 3; ++gt) {
          double th = a * dth + 0.5 * dth + 0.5 * dth * kGauss3x[gt];
          double wt = 0.5 * dth * kGauss3w[gt];
          basis(i, a, r, th, N, dNr, dNth, dofs);
          double fv = f_xi(r * std::cos(th), r * std::sin(th));
          if (fv != 0.0) {
            double wq = wr * wt * r * fv;
            for (int p = 0; p < nloc; ++p) b[dofs[p]] -= wq * N[p];
          }
        }
      }
    }
  }
  // Rim line integral.
  for (int a = 0; a < nt_; ++a) {
    for (int gt = 0; gt < 3; ++gt) {
      double th = a * dth + 0.5 * dth + 0.5 * dth * kGauss3x[gt];
      double wt = 0.5 * dth * kGauss3w[gt] * h_;
      double gv = g_of_theta(th);
      if (gv == 0.0) continue;
      double tn[3] = {a * dth, (a + 0.5) * dth, (a + 1.0) * dth};
      double Lt[3], dLt[3];
      lagrange3(th, tn, Lt, dLt);
      for (int q = 0; q < 3; ++q)
        b[dof_index(2 * nr_, 2 * a + q)] += wt * gv * Lt[q];
    }
  }
  return b;
}

Eigen::VectorXd DiskSolver::solve_load(Eigen::VectorXd b, double* compat_residual) const {
  double compat = b.sum();
  if (compat_residual) *compat_residual = std::abs(compat);
  b.array() -= compat / n_dof_;
  b[0] = 0.0;
  Eigen::VectorXd u = ldlt_->solve(b);
  double m = mass_.dot(u) / mass_.sum();
  u.array() -= m;
  return u;
}

Eigen::VectorXd DiskSolver::solve(const std::function<double(double, double)>& f_xi,
                                  const std::function<double(double)>& g_of_theta,
                                  double* compat_residual) const {
  return solve_load(assemble_load(f_xi, g_of_theta), compat_residual);
}

double DiskSolver::mean(const Eigen::VectorXd& u) const { return mass_.dot(u) / mass_.sum(); }

double DiskSolver::rim_average(const Eigen::VectorXd& u) const {
  double s = 0.0;
  int M = 2 * nt_;
  for (int m = 0; m < M; ++m) s += u[dof_index(2 * nr_, m)];
  return s / M;
}

double DiskSolver::value(const Eigen::VectorXd& u, double r, double theta) const {
  r = std::min(std::max(r, 0.0), h_);
  auto it = std::upper_bound(redge_.begin(), redge_.end(), r);
  int i = std::max(0, static_cast<int>(it - redge_.begin()) - 1);
  i = std::min(i, nr_ - 1);
  double tw = std::fmod(theta, 2.0 * M_PI);
  if (tw < 0) tw += 2.0 * M_PI;
  int a = std::min(static_cast<int>(tw / (2.0 * M_PI / nt_)), nt_ - 1);
  double N[9], dNr[9], dNth[9];
  int dofs[9];
  basis(i, a, r, tw, N, dNr, dNth, dofs);
  int nloc = (i == 0) ? 7 : 9;
  double v = 0.0;
  for (int p = 0; p < nloc; ++p) v += N[p] * u[dofs[p]];
  return v;
}

std::array<double, 2> DiskSolver::gradient(const Eigen::VectorXd& u, double r,
                                           double theta) const {
  r = std::min(std::max(r, 1e-12 * h_), h_);
  auto it = std::upper_bound(redge_.begin(), redge_.end(), r);
  int i = std::max(0, static_cast<int>(it - redge_.begin()) - 1);
  i = std::min(i, nr_ - 1);
  double tw = std::fmod(theta, 2.0 * M_PI);
  if (tw < 0) tw += 2.0 * M_PI;
  int a = std::min(static_cast<int>(tw / (2.0 * M_PI / nt_)), nt_ - 1);
  double N[9], dNr[9], dNth[9];
  int dofs[9];
  basis(i, a, r, tw, N, dNr, dNth, dofs);
  int nloc = (i == 0) ? 7 : 9;
  double gr = 0.0, gth = 0.0;
  for (int p = 0; p < nloc; ++p) {
    gr += dNr[p] * u[dofs[p]];
    gth += dNth[p] * u[dofs[p]];
  }
  gth /= r;
  double ct = std::cos(tw), st = std::sin(tw);
  return {gr * ct - gth * st, gr * st + gth * ct};
}

double DiskSolver::s_ds(const Eigen::VectorXd& u, double r, double theta) const {
  r = std::min(std::max(r, 0.0), h_);
  if (r == 0.0) return 0.0;
  auto it = std::upper_bound(redge_.begin(), redge_.end(), r);
  int i = std::max(0, static_cast<int>(it - redge_.begin()) - 1);
  i = std::min(i, nr_ - 1);
  double tw = std::fmod(theta, 2.0 * M_PI);
  if (tw < 0) tw += 2.0 * M_PI;
  int a = std::min(static_cast<int>(tw / (2.0 * M_PI / nt_)), nt_ - 1);
  double N[9], dNr[9], dNth[9];
  int dofs[9];
  basis(i, a, r, tw, N, dNr, dNth, dofs);
  int nloc = (i == 0) ? 7 : 9;
  double gr = 0.0;
  for (int p = 0; p < nloc; ++p) gr += dNr[p] * u[dofs[p]];
  return r * gr;  // s d/ds = r d/dr
}

Eigen::VectorXd DiskSolver::s_ds_nodal(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_dof_);
  const double dth = 2.0 * M_PI / nt_;
  double N[9], dNr[9], dNth[9];
  int dofs[9];
  // Center node: r d/dr = 0 there.
  for (int j = 1; j <= 2 * nr_; ++j) {
    int cell = std::min((j - 1) / 2, nr_ - 1);
    double r = rnode_[static_cast<std::size_t>(j)];
    for (int m = 0; m < 2 * nt_; ++m) {
      int acell = std::min(m / 2, nt_ - 1);
      double th = 0.5 * dth * m;
      basis(cell, acell, r, th, N, dNr, dNth, dofs);
      int nloc = (cell == 0) ? 7 : 9;
      double g = 0.0;
      for (int p = 0; p < nloc; ++p) g += dNr[p] * u[dofs[p]];
      out[dof_index(j, m)] = r * g;
    }
  }
  return out;
}

double boundary_average(const DiskSolver& solver, const Eigen::VectorXd& u) {
  return solver.rim_average(u);
}

// ---------------------------------------------------------------------------
// DiskField
// ---------------------------------------------------------------------------

double DiskField::station_interp(double x,
                                 const std::function<double(const StationData&)>& f) const {
  TimeStencil st = station_stencil(stations_, x, 0);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (st.w[j] == 0.0) continue;
    acc += st.w[j] * f(data_[st.i0 + static_cast<std::size_t>(j)]);
  }
  return acc;
}

namespace {
double stencil_combine(const std::vector<Eigen::VectorXd>& u, const TimeStencil& st,
                       const std::function<double(const Eigen::VectorXd&)>& eval, int deriv) {
  double s = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double* wsel = (deriv == 0) ? st.w : (deriv == 1 ? st.dw : st.d2w);
    if (wsel[j] == 0.0) continue;
    s += wsel[j] * eval(u[st.i0 + static_cast<std::size_t>(j)]);
  }
  return s;
}
}  // namespace

double DiskField::bary_deriv(double x, const std::function<double(const StationData&)>& f) const {
  TimeStencil st = station_stencil(stations_, x, 1);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (st.w[j] == 0.0) continue;
    acc += st.w[j] * f(data_[st.i0 + static_cast<std::size_t>(j)]);
  }
  return acc;
}

double DiskField::value(double x, double xi1, double xi2, double t) const {
  if (empty()) return 0.0;
  double r = std::hypot(xi1, xi2), th = std::atan2(xi2, xi1);
  double s = std::min(1.0, r / h_of_x_(x));
  TimeStencil st = time_stencil(tsamples_, t);
  return station_interp(x, [&](const StationData& sd) {
    return stencil_combine(
        sd.u, st,
        [&](const Eigen::VectorXd& uv) { return sd.solver->value(uv, s * sd.h, th); }, 0);
  });
}

double DiskField::dt(double x, double xi1, double xi2, double t) const {
  if (empty()) return 0.0;
  double r = std::hypot(xi1, xi2), th = std::atan2(xi2, xi1);
  double s = std::min(1.0, r / h_of_x_(x));
  TimeStencil st = time_stencil(tsamples_, t);
  return station_interp(x, [&](const StationData& sd) {
    return stencil_combine(
        sd.dut, st,
        [&](const Eigen::VectorXd& uv) { return sd.solver->value(uv, s * sd.h, th); }, 0);
  });
}

std::array<double, 2> DiskField::grad_xi(double x, double xi1, double xi2, double t) const {
  if (empty()) return {0.0, 0.0};
  double r = std::hypot(xi1, xi2), th = std::atan2(xi2, xi1);
  double hx = h_of_x_(x);
  double s = std::min(1.0, r / hx);
  TimeStencil st = time_stencil(tsamples_, t);
  double g1 = station_interp(x, [&](const StationData& sd) {
    return stencil_combine(sd.u, st,
                           [&](const Eigen::VectorXd& uv) {
                             return sd.solver->gradient(uv, s * sd.h, th)[0] * (sd.h / hx);
                           },
                           0);
  });
  double g2 = station_interp(x, [&](const StationData& sd) {
    return stencil_combine(sd.u, st,
                           [&](const Eigen::VectorXd& uv) {
                             return sd.solver->gradient(uv, s * sd.h, th)[1] * (sd.h / hx);
                           },
                           0);
  });
  return {g1, g2};
}

double DiskField::dx(double x, double xi1, double xi2, double t) const {
  if (empty()) return 0.0;
  double r = std::hypot(xi1, xi2), th = std::atan2(xi2, xi1);
  double s = std::min(1.0, r / h_of_x_(x));
  TimeStencil st = time_stencil(tsamples_, t);
  return station_interp(x, [&](const StationData& sd) {
    return stencil_combine(
        sd.dux, st,
        [&](const Eigen::VectorXd& uv) { return sd.solver->value(uv, s * sd.h, th); }, 0);
  });
}

double DiskField::hat(double x, double t) const {
  if (empty()) return 0.0;
  TimeStencil st = time_stencil(tsamples_, t);
  return station_interp(x, [&](const StationData& sd) {
    return stencil_combine(
        sd.u, st, [&](const Eigen::VectorXd& uv) { return sd.solver->rim_average(uv); }, 0);
  });
}

double DiskField::hat_dx(double x, double t) const {
  if (empty()) return 0.0;
  TimeStencil st = time_stencil(tsamples_, t);
  return bary_deriv(x, [&](const StationData& sd) {
    return stencil_combine(
        sd.u, st, [&](const Eigen::VectorXd& uv) { return sd.solver->rim_average(uv); }, 0);
  });
}

double DiskField::rim_flux(double x, double theta, double t) const {
  if (!rim_flux_fn_) return 0.0;
  return rim_flux_fn_(x, theta, t, 0.0);
}

double DiskField::elliptic_rhs(double x, double xi1, double xi2, double t) const {
  if (!elliptic_rhs_fn_) return 0.0;
  return elliptic_rhs_fn_(x, xi1, xi2, t);
}

void DiskField::dump(std::ostream& out) const {
  out << "# junction-asy disk field dump\n";
  out << "# edge " << edge + 1 << " order " << order << "\n";
  out << "# stations " << stations_.size() << " tsamples " << tsamples_.size() << "\n";
  char buf[128];
  for (std::size_t is = 0; is < data_.size(); ++is) {
    const StationData& sd = data_[is];
    out << "station " << sd.x << " radius " << sd.h << " ndof "
        << (sd.u.empty() ? 0 : static_cast<int>(sd.u[0].size())) << "\n";
    for (std::size_t it = 0; it < sd.u.size(); ++it) {
      out << "t " << tsamples_[it] << "\n";
      for (Eigen::Index i = 0; i < sd.u[it].size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", sd.u[it][i]);
        out << buf;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// DiskCellBuilder
// ---------------------------------------------------------------------------

DiskCellBuilder::DiskCellBuilder(std::shared_ptr<const JunctionSpec> spec, int edge)
    : spec_(std::move(spec)), edge_(edge) {}

DiskField DiskCellBuilder::solve_generic(
    int k_target, const LoadFactory& loads,
    const std::function<double(double, double, double, double)>& f_general,
    const std::function<double(double, double, double)>& g_general,
    double compat_tol) const {
  const EdgeSpec& e = spec_->edges[static_cast<std::size_t>(edge_)];
  const Numerics& num = spec_->numerics;

  DiskField field;
  field.edge = edge_;
  field.order = k_target;
  field.stations_.resize(static_cast<std::size_t>(num.disk_stations));
  for (int j = 0; j < num.disk_stations; ++j)
    field.stations_[static_cast<std::size_t>(j)] =
        e.length * static_cast<double>(j) / (num.disk_stations - 1);
  field.tsamples_.resize(static_cast<std::size_t>(num.disk_t_points));
  for (int j = 0; j < num.disk_t_points; ++j)
    field.tsamples_[static_cast<std::size_t>(j)] =
        spec_->T * static_cast<double>(j) / (num.disk_t_points - 1);

  {
    ExprFn hfn = e.aperture, dhfn = e.aperture_dx;
    field.h_of_x_ = [hfn](double x) { return hfn.eval({x}); };
    field.dh_of_x_ = [dhfn](double x) { return dhfn.eval({x}); };
  }
  const double zone = e.end_zone;
  field.data_.resize(field.stations_.size());
  for (std::size_t is = 0; is < field.stations_.size(); ++is) {
    DiskField::StationData& sd = field.data_[is];
    sd.x = field.stations_[is];
    sd.h = e.h(sd.x);
    sd.solver = std::make_shared<DiskSolver>(
        sd.h, num.disk_nr, num.disk_ntheta,
        [&e](double a, double b) { return e.a11.eval({a, b}); },
        [&e](double a, double b) { return e.a12.eval({a, b}); },
        [&e](double a, double b) { return e.a22.eval({a, b}); });
    sd.u.assign(field.tsamples_.size(), Eigen::VectorXd::Zero(sd.solver->n_dof()));
    // Stations in the end dead zones carry the exact zero field: the data
    // are flat there and the cell problems are homogeneous.
    bool dead = (sd.x <= zone) || (sd.x >= e.length - zone);
    if (dead) continue;
    for (std::size_t it = 0; it < field.tsamples_.size(); ++it) {
      double t = field.tsamples_[it];
      LoadFns lf = loads(sd.x, t);
      Eigen::VectorXd b = sd.solver->assemble_load(lf.f, lf.g);
      if (b.lpNorm<Eigen::Infinity>() == 0.0) continue;
      double compat = 0.0;
      sd.u[it] = sd.solver->solve_load(std::move(b), &compat);
      double scale = std::max(1.0, sd.u[it].lpNorm<Eigen::Infinity>());
      if (compat > compat_tol * std::max(1.0, scale))
        throw DiskSolveError("disk cell problem incompatible at x=" + std::to_string(sd.x) +
                                 " t=" + std::to_string(t) +
                                 " (residual " + std::to_string(compat) + ")",
                             compat);
      field.max_mean_defect_ =
          std::max(field.max_mean_defect_, std::abs(sd.solver->mean(sd.u[it])));
    }
  }

  // Nodal x-derivatives at fixed (s, theta) across the aligned station
  // meshes, with the aperture chain-rule term, and nodal t-derivatives.
  {
    const std::size_t ns = field.stations_.size(), ntv = field.tsamples_.size();
    for (std::size_t is = 0; is < ns; ++is) {
      DiskField::StationData& sd = field.data_[is];
      sd.dux.assign(ntv, Eigen::VectorXd::Zero(sd.solver->n_dof()));
      sd.dut.assign(ntv, Eigen::VectorXd::Zero(sd.solver->n_dof()));
      TimeStencil sx = station_stencil(field.stations_, sd.x, 1);
      for (std::size_t it = 0; it < ntv; ++it) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(sd.solver->n_dof());
        for (int j = 0; j < 4; ++j)
          if (sx.w[j] != 0.0) acc += sx.w[j] * field.data_[sx.i0 + static_cast<std::size_t>(j)].u[it];
        double dh = field.dh_of_x_(sd.x);
        if (dh != 0.0) acc -= (dh / sd.h) * sd.solver->s_ds_nodal(sd.u[it]);
        sd.dux[it] = std::move(acc);
      }
      for (std::size_t it = 0; it < ntv; ++it) {
        TimeStencil st = time_stencil(field.tsamples_, field.tsamples_[it]);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(sd.solver->n_dof());
        for (int j = 0; j < 4; ++j)
          if (st.dw[j] != 0.0) acc += st.dw[j] * sd.u[st.i0 + static_cast<std::size_t>(j)];
        sd.dut[it] = std::move(acc);
      }
    }
  }

  field.rim_flux_fn_ = [g_general](double x, double th, double t, double) {
    return g_general(x, th, t);
  };
  field.elliptic_rhs_fn_ = f_general;
  return field;
}

DiskField DiskCellBuilder::solve_u1(std::shared_ptr<const EdgeProfile> w0,
                                    double compat_tol) const {
  auto spec = spec_;
  int edge = edge_;
  auto f_gen = [spec, edge, w0](double x, double x1, double x2, double t) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(edge)];
    double w = w0->value(x, t);
    double divv = e.v_trans_div[0].eval({x, x1, x2}) + e.v_trans_div[1].eval({x, x1, x2});
    return e.dv(x) * w + e.v(x) * w0->dx(x, t) + w0->dt(x, t) + w * divv;
  };
  auto g_gen = [spec, edge, w0](double x, double th, double t) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(edge)];
    double h = e.h(x);
    double x1 = h * std::cos(th), x2 = h * std::sin(th);
    double w = w0->value(x, t);
    double vn = e.v_trans[0].eval({x, x1, x2}) * std::cos(th) +
                e.v_trans[1].eval({x, x1, x2}) * std::sin(th);
    return w * vn - e.v(x) * e.dh(x) * w - e.phi.eval({x1, x2, x, t});
  };
  auto loads = [spec, edge, w0](double x, double t) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(edge)];
    double w = w0->value(x, t);
    double base = e.dv(x) * w + e.v(x) * w0->dx(x, t) + w0->dt(x, t);
    double h = e.h(x), vdh = e.v(x) * e.dh(x);
    bool vt = e.has_vtrans();
    const EdgeSpec* ep = &e;
    LoadFns lf;
    lf.f = [ep, base, w, x, vt](double x1, double x2) {
      if (!vt) return base;
      double divv =
          ep->v_trans_div[0].eval({x, x1, x2}) + ep->v_trans_div[1].eval({x, x1, x2});
      return base + w * divv;
    };
    lf.g = [ep, w, x, h, vdh, vt, t](double th) {
      double x1 = h * std::cos(th), x2 = h * std::sin(th);
      double vn = vt ? ep->v_trans[0].eval({x, x1, x2}) * std::cos(th) +
                           ep->v_trans[1].eval({x, x1, x2}) * std::sin(th)
                     : 0.0;
      return w * vn - vdh * w - ep->phi.eval({x1, x2, x, t});
    };
    return lf;
  };
  return solve_generic(1, loads, f_gen, g_gen, compat_tol);
}

DiskField DiskCellBuilder::solve_uk(int k_target, std::shared_ptr<const EdgeProfile> wk,
                                    std::shared_ptr<const DiskField> uk,
                                    std::shared_ptr<const EdgeProfile> wkm1,
                                    std::shared_ptr<const DiskField> ukm1,
                                    double compat_tol) const {
  if (k_target < 2) throw std::invalid_argument("solve_uk: k_target >= 2 (use solve_u1)");
  if (ukm1 && !ukm1->empty())
    throw std::logic_error("disk orders beyond u2 are not supported");
  auto spec = spec_;
  int edge = edge_;

  auto f_gen = [spec, edge, wk, uk, wkm1](double x, double x1, double x2, double t) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(edge)];
    double w = wk->value(x, t);
    double u = uk->value(x, x1, x2, t);
    double divv = e.v_trans_div[0].eval({x, x1, x2}) + e.v_trans_div[1].eval({x, x1, x2});
    auto gu = uk->grad_xi(x, x1, x2, t);
    double vbar_dot_grad =
        e.v_trans[0].eval({x, x1, x2}) * gu[0] + e.v_trans[1].eval({x, x1, x2}) * gu[1];
    double val = e.dv(x) * (w + u) + e.v(x) * (wk->dx(x, t) + uk->dx(x, x1, x2, t)) +
                 wk->dt(x, t) + uk->dt(x, x1, x2, t) + (w + u) * divv + vbar_dot_grad;
    if (wkm1) val -= e.a_axial * wkm1->dxx(x, t);
    return val;
  };
  auto g_gen = [spec, edge, wk, uk, wkm1, k_target](double x, double th, double t) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(edge)];
    double h = e.h(x);
    double x1 = h * std::cos(th), x2 = h * std::sin(th);
    double w = wk->value(x, t);
    double u = uk->value(x, x1, x2, t);
    double vn = e.v_trans[0].eval({x, x1, x2}) * std::cos(th) +
                e.v_trans[1].eval({x, x1, x2}) * std::sin(th);
    double val = (w + u) * vn - e.v(x) * e.dh(x) * (w + u);
    if (wkm1) val += e.a_axial * e.dh(x) * wkm1->dx(x, t);
    double etak = eta_coefficient(k_target - 1, e.dh(x));
    if (etak != 0.0) val -= etak * e.phi.eval({x1, x2, x, t});
    return val;
  };

  auto loads = [spec, edge, wk, uk, wkm1, k_target](double x, double t) {
    const EdgeSpec& e = spec->edges[static_cast<std::size_t>(edge)];
    double w = wk->value(x, t);
    double wx = wk->dx(x, t), wt = wk->dt(x, t);
    double dv = e.dv(x), v = e.v(x);
    double base = dv * w + v * wx + wt;
    double wkm1xx = wkm1 ? e.a_axial * wkm1->dxx(x, t) : 0.0;
    double wkm1x = wkm1 ? wkm1->dx(x, t) : 0.0;
    double h = e.h(x), dh = e.dh(x);
    double etak = eta_coefficient(k_target - 1, dh);
    bool vt = e.has_vtrans();
    const EdgeSpec* ep = &e;
    const DiskField* uf = uk.get();
    LoadFns lf;
    lf.f = [ep, uf, base, w, x, t, dv, v, vt, wkm1xx](double x1, double x2) {
      double u = uf->value(x, x1, x2, t);
      double val = base + dv * u + v * uf->dx(x, x1, x2, t) + uf->dt(x, x1, x2, t) - wkm1xx;
      if (vt) {
        double divv =
            ep->v_trans_div[0].eval({x, x1, x2}) + ep->v_trans_div[1].eval({x, x1, x2});
        auto gu = uf->grad_xi(x, x1, x2, t);
        val += (w + u) * divv + ep->v_trans[0].eval({x, x1, x2}) * gu[0] +
               ep->v_trans[1].eval({x, x1, x2}) * gu[1];
      }
      return val;
    };
    lf.g = [ep, uf, w, x, t, h, dh, v, vt, wkm1x, etak](double th) {
      double x1 = h * std::cos(th), x2 = h * std::sin(th);
      double u = uf->value(x, x1, x2, t);
      double vn = vt ? ep->v_trans[0].eval({x, x1, x2}) * std::cos(th) +
                           ep->v_trans[1].eval({x, x1, x2}) * std::sin(th)
                     : 0.0;
      double val = (w + u) * vn - v * dh * (w + u) + ep->a_axial * dh * wkm1x;
      if (etak != 0.0) val -= etak * ep->phi.eval({x1, x2, x, t});
      return val;
    };
    return lf;
  };
  return solve_generic(k_target, loads, f_gen, g_gen, compat_tol);
}

double DiskCellBuilder::compatibility_residual(int k_target, double x, double t,
                                               const EdgeProfile& wk, const DiskField& uk,
                                               const EdgeProfile* wkm1,
                                               const DiskField* ukm1) const {
  const EdgeSpec& e = spec_->edges[static_cast<std::size_t>(edge_)];
  const Numerics& num = spec_->numerics;
  DiskSolver solver(
      e.h(x), num.disk_nr, num.disk_ntheta,
      [&e](double a, double b) { return e.a11.eval({a, b}); },
      [&e](double a, double b) { return e.a12.eval({a, b}); },
      [&e](double a, double b) { return e.a22.eval({a, b}); });

  std::function<double(double, double)> fv;
  std::function<double(double)> gv;
  if (k_target == 1) {
    const EdgeSpec* ep = &e;
    const EdgeProfile* w0 = &wk;
    fv = [ep, w0, x, t](double x1, double x2) {
      double divv = ep->v_trans_div[0].eval({x, x1, x2}) + ep->v_trans_div[1].eval({x, x1, x2});
      return ep->dv(x) * w0->value(x, t) + ep->v(x) * w0->dx(x, t) + w0->dt(x, t) +
             w0->value(x, t) * divv;
    };
    gv = [ep, w0, x, t](double th) {
      double h = ep->h(x);
      double x1 = h * std::cos(th), x2 = h * std::sin(th);
      double vn = ep->v_trans[0].eval({x, x1, x2}) * std::cos(th) +
                  ep->v_trans[1].eval({x, x1, x2}) * std::sin(th);
      double w = w0->value(x, t);
      return w * vn - ep->v(x) * ep->dh(x) * w - ep->phi.eval({x1, x2, x, t});
    };
  } else {
    const EdgeSpec* ep = &e;
    const EdgeProfile* wkp = &wk;
    const DiskField* ukp = &uk;
    fv = [ep, wkp, ukp, wkm1, x, t](double x1, double x2) {
      double w = wkp->value(x, t);
      double u = ukp->value(x, x1, x2, t);
      double divv = ep->v_trans_div[0].eval({x, x1, x2}) + ep->v_trans_div[1].eval({x, x1, x2});
      auto gu = ukp->grad_xi(x, x1, x2, t);
      double vdg = ep->v_trans[0].eval({x, x1, x2}) * gu[0] +
                   ep->v_trans[1].eval({x, x1, x2}) * gu[1];
      double val = ep->dv(x) * (w + u) + ep->v(x) * (wkp->dx(x, t) + ukp->dx(x, x1, x2, t)) +
                   wkp->dt(x, t) + ukp->dt(x, x1, x2, t) + (w + u) * divv + vdg;
      if (wkm1) val -= ep->a_axial * wkm1->dxx(x, t);
      return val;
    };
    gv = [ep, wkp, ukp, wkm1, k_target, x, t](double th) {
      double h = ep->h(x);
      double x1 = h * std::cos(th), x2 = h * std::sin(th);
      double w = wkp->value(x, t);
      double u = ukp->value(x, x1, x2, t);
      double vn = ep->v_trans[0].eval({x, x1, x2}) * std::cos(th) +
                  ep->v_trans[1].eval({x, x1, x2}) * std::sin(th);
      double val = (w + u) * vn - ep->v(x) * ep->dh(x) * (w + u);
      if (wkm1) val += ep->a_axial * ep->dh(x) * wkm1->dx(x, t);
      double etak = eta_coefficient(k_target - 1, ep->dh(x));
      if (etak != 0.0) val -= etak * ep->phi.eval({x1, x2, x, t});
      return val;
    };
  }
  (void)ukm1;
  Eigen::VectorXd b = solver.assemble_load(fv, gv);
  return std::abs(b.sum());
}

}  // namespace junction
