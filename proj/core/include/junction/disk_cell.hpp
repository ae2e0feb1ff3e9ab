#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <iosfwd>
#include <memory>

#include "junction/limit_graph.hpp"
#include "junction/model.hpp"

namespace junction {

class DiskSolveError : public std::runtime_error {
 public:
  DiskSolveError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Biquadratic (Q2) tensor elements in polar coordinates on the disk of
/// radius h, nr x ntheta cells, radial nodes geometrically clustered at the
/// rim, the r=0 ring collapsed to a single DOF. The Neumann null space
/// (constants) is pinned and solutions are shifted to zero mean.
class DiskSolver {
 public:
  using Coeff = std::function<double(double, double)>;  // (xi1, xi2)

  DiskSolver(double radius, int nr, int ntheta, Coeff a11, Coeff a12, Coeff a22);

  int n_dof() const { return n_dof_; }
  double radius() const { return h_; }

  /// Solve div(D grad u) = f with (D grad u).nu = g_rim on the rim,
  /// zero-mean normalized. |int f - oint g| is reported through
  /// compat_residual when non-null.
  Eigen::VectorXd solve(const std::function<double(double, double)>& f_xi,
                        const std::function<double(double)>& g_of_theta,
                        double* compat_residual = nullptr) const;

  /// Same with a preassembled load vector (see assemble_load).
  Eigen::VectorXd solve_load(Eigen::VectorXd b, double* compat_residual = nullptr) const;

  Eigen::VectorXd assemble_load(const std::function<double(double, double)>& f_xi,
                                const std::function<double(double)>& g_of_theta) const;

  double mean(const Eigen::VectorXd& u) const;      // area average
  double rim_average(const Eigen::VectorXd& u) const;

  /// Q2 interpolation of a nodal field at polar point (r, theta), r <= h.
  double value(const Eigen::VectorXd& u, double r, double theta) const;
  /// Cartesian gradient (d/dxi1, d/dxi2).
  std::array<double, 2> gradient(const Eigen::VectorXd& u, double r, double theta) const;
  /// (s d/ds) u at fixed angle, s = r/h (used by cross-station chain rules).
  double s_ds(const Eigen::VectorXd& u, double r, double theta) const;
  /// Nodal field of (s d/ds) u (radial derivative of the Q2 interpolant at
  /// the mesh nodes, one-sided at cell boundaries).
  Eigen::VectorXd s_ds_nodal(const Eigen::VectorXd& u) const;

  int nr() const { return nr_; }
  int ntheta() const { return nt_; }

 private:
  struct Elem;
  void basis(int i, int a, double r, double th, double* N, double* dNr, double* dNth,
             int* dofs) const;
  int dof_index(int j, int m) const;

  double h_;
  int nr_, nt_;
  int n_dof_;
  std::vector<double> redge_, rnode_;
  Eigen::SparseMatrix<double> K_;
  Eigen::VectorXd mass_;  // int phi_i dA
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

/// u_k on one edge: nodal Q2 fields per (station, time sample), stored in
/// radius-relative coordinates (s = r/h(x), theta).
class DiskField {
 public:
  DiskField() = default;

  int edge = 0;
  int order = 0;

  bool empty() const { return stations_.empty(); }
  const std::vector<double>& stations() const { return stations_; }
  const std::vector<double>& tsamples() const { return tsamples_; }

  /// Physical value u_k(x, xi1, xi2, t); returns 0 outside all stations'
  /// support (the field vanishes in the end dead zones by construction).
  double value(double x, double xi1, double xi2, double t) const;
  /// d/dt, d/dx at fixed physical transverse point, cartesian gradient.
  double dt(double x, double xi1, double xi2, double t) const;
  double dx(double x, double xi1, double xi2, double t) const;
  std::array<double, 2> grad_xi(double x, double xi1, double xi2, double t) const;

  /// Rim average u-hat_k(x,t) and its x-derivative from the station
  /// interpolant.
  double hat(double x, double t) const;
  double hat_dx(double x, double t) const;

  /// Exact Neumann closure imposed on the rim at angle theta (the (bc_1) /
  /// (bc_3) right-hand side): (D grad u).nu on the rim.
  double rim_flux(double x, double theta, double t) const;

  /// The defining elliptic identity div(D grad u_k) evaluated through the
  /// cell equation right-hand side (exact for the continuum object).
  double elliptic_rhs(double x, double xi1, double xi2, double t) const;

  /// Zero-mean defect max over stations/times (diagnostic).
  double max_mean_defect() const { return max_mean_defect_; }

  /// Plain-text structured dump (one block per station; see README).
  void dump(std::ostream& out) const;

  friend class DiskCellBuilder;

 private:
  struct StationData {
    double x = 0.0;
    double h = 1.0;
    std::shared_ptr<DiskSolver> solver;
    std::vector<Eigen::VectorXd> u;     // per time sample
    std::vector<Eigen::VectorXd> dux;   // d/dx at fixed (s, theta)
    std::vector<Eigen::VectorXd> dut;   // d/dt
  };

  double station_interp(double x, const std::function<double(const StationData&)>& f) const;
  double bary_deriv(double x, const std::function<double(const StationData&)>& f) const;

  std::vector<double> stations_;
  std::vector<double> tsamples_;
  std::vector<StationData> data_;
  std::function<double(double)> h_of_x_, dh_of_x_;
  double max_mean_defect_ = 0.0;
  std::function<double(double, double, double, double)> rim_flux_fn_;
  std::function<double(double, double, double, double)> elliptic_rhs_fn_;
};

/// Builds the transverse cell fields u_k order by order. Inputs are held by
/// shared pointer: the returned field keeps closures over them for the
/// composed-residual machinery.
class DiskCellBuilder {
 public:
  DiskCellBuilder(std::shared_ptr<const JunctionSpec> spec, int edge);

  /// Order-1 field from the solved w0 profile (compatibility is inherited
  /// from the limit problem).
  DiskField solve_u1(std::shared_ptr<const EdgeProfile> w0, double compat_tol = 1e-6) const;

  /// Order k_target >= 2 from (w_{k_target-1}, u_{k_target-1},
  /// w_{k_target-2}, u_{k_target-2}).
  DiskField solve_uk(int k_target, std::shared_ptr<const EdgeProfile> wk,
                     std::shared_ptr<const DiskField> uk,
                     std::shared_ptr<const EdgeProfile> wkm1,
                     std::shared_ptr<const DiskField> ukm1, double compat_tol = 1e-6) const;

  /// |int_disk RHS - oint Neumann| for the order-k problem at one station.
  double compatibility_residual(int k_target, double x, double t, const EdgeProfile& wk,
                                const DiskField& uk, const EdgeProfile* wkm1,
                                const DiskField* ukm1) const;

  struct LoadFns {
    std::function<double(double, double)> f;
    std::function<double(double)> g;
  };
  using LoadFactory = std::function<LoadFns(double x, double t)>;

 private:
  DiskField solve_generic(int k_target, const LoadFactory& loads,
                          const std::function<double(double, double, double, double)>& f_general,
                          const std::function<double(double, double, double)>& g_general,
                          double compat_tol) const;

  std::shared_ptr<const JunctionSpec> spec_;
  int edge_;
};

/// Boundary average of a one-off nodal field (criterion oracle helper).
double boundary_average(const DiskSolver& solver, const Eigen::VectorXd& u);

}  // namespace junction
