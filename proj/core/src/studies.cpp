#include "junction/studies.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "junction/sobol.hpp"
#include "junction/threads.hpp"

namespace junction {

namespace {

inline void transverse_axes(int axis, int& t1, int& t2) {
  switch (axis) {
    case 0: t1 = 1; t2 = 2; break;
    case 1: t1 = 0; t2 = 2; break;
    default: t1 = 0; t2 = 1; break;
  }
}

double fit_slope(const std::vector<double>& eps, const std::vector<double>& sup) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (sup[i] <= 0.0) continue;
    xs.push_back(std::log(eps[i]));
    ys.push_back(std::log(sup[i]));
  }
  if (xs.size() < 3) return 0.0;
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

void ResidualReport::write_csv(std::ostream& out) const {
  out << "M,eps,region,sup_residual,slope\n";
  char buf[192];
  auto row = [&](double eps, const char* region, double v, double slope, bool with_slope) {
    if (with_slope)
      std::snprintf(buf, sizeof buf, "%d,%.12g,%s,%.17g,%.17g\n", M, eps, region, v, slope);
    else
      std::snprintf(buf, sizeof buf, "%d,%.12g,%s,%.17g,\n", M, eps, region, v);
    out << buf;
  };
  for (const auto& r : rows) {
    row(r.eps, "arm", r.arm, 0, false);
    row(r.eps, "band", r.band, 0, false);
    row(r.eps, "node", r.node, 0, false);
    row(r.eps, "interior", r.interior, 0, false);
    row(r.eps, "boundary", r.boundary, 0, false);
  }
  std::snprintf(buf, sizeof buf, "%d,,interior_slope,%.17g,\n", M, slope_interior);
  out << buf;
  std::snprintf(buf, sizeof buf, "%d,,boundary_slope,%.17g,\n", M, slope_boundary);
  out << buf;
}

ResidualReport residual_study(std::shared_ptr<const CoefficientSet> coeffs, int M,
                              const std::vector<double>& eps_list, int n_samples,
                              std::uint64_t seed) {
  ResidualReport rep;
  rep.M = M;
  rep.seed = seed;
  rep.n_samples = n_samples;
  const JunctionSpec& spec = *coeffs->spec;

  for (double eps : eps_list) {
    PartialSum U = assemble_partial_sum(coeffs, eps, M);
    ResidualRow row;
    row.eps = eps;
    const double sgam = std::pow(eps, spec.gamma);
    const double ell0 = spec.node.ell0;

    Sobol sob(4, seed);
    std::uint64_t idx = 0;
    // Arm and band clouds per edge.
    for (int e = 0; e < 3; ++e) {
      const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
      int t1, t2;
      transverse_axes(e, t1, t2);
      for (int rgn = 0; rgn < 2; ++rgn) {
        double xa = rgn == 0 ? 3.0 * ell0 * sgam * 1.001 : 2.0 * ell0 * sgam * 1.001;
        double xb = rgn == 0 ? es.length * 0.995 : 3.0 * ell0 * sgam * 0.999;
        std::vector<double> vals(static_cast<std::size_t>(n_samples), 0.0);
        std::uint64_t base = idx;
        parallel_for(vals.size(), [&](std::size_t i) {
          auto p = sob.point(base + i);
          double x = xa + (xb - xa) * p[0];
          double r = 0.95 * eps * es.h(x) * std::sqrt(p[1]);
          double th = 2.0 * M_PI * p[2];
          double t = spec.T * (0.02 + 0.98 * p[3]);
          std::array<double, 3> pt{};
          pt[static_cast<std::size_t>(e)] = x;
          pt[static_cast<std::size_t>(t1)] = r * std::cos(th);
          pt[static_cast<std::size_t>(t2)] = r * std::sin(th);
          vals[i] = std::abs(U.interior_residual(pt, t));
        });
        idx += vals.size();
        for (double v : vals) {
          if (rgn == 0) row.arm = std::max(row.arm, v);
          else row.band = std::max(row.band, v);
        }
      }
    }
    // Node cloud: rejection sampling inside the node region.
    {
      NodeShape shape = spec.node.shape();
      int found = 0;
      std::uint64_t tries = 0;
      while (found < n_samples && tries < static_cast<std::uint64_t>(40) * n_samples) {
        auto p = sob.point(idx + tries++);
        double lim = 2.0 * ell0 * sgam * 0.98;
        std::array<double, 3> pt{lim * (2 * p[0] - 1) * 0.5, lim * (2 * p[1] - 1) * 0.5,
                                 lim * (2 * p[2] - 1) * 0.5};
        // Accept points inside the junction with every x_i below the band.
        if (!U.inside(pt)) continue;
        double t = spec.T * (0.02 + 0.98 * p[3]);
        row.node = std::max(row.node, std::abs(U.interior_residual(pt, t)));
        ++found;
      }
      idx += tries;
    }
    // Lateral boundary cloud.
    Sobol sob3(3, seed + 1);
    for (int e = 0; e < 3; ++e) {
      const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
      std::vector<double> vals(static_cast<std::size_t>(n_samples), 0.0);
      parallel_for(vals.size(), [&](std::size_t i) {
        auto p = sob3.point(static_cast<std::uint64_t>(e) * static_cast<std::uint64_t>(n_samples) + i);
        double x = eps * ell0 * 1.05 + (es.length * 0.995 - eps * ell0 * 1.05) * p[0];
        double th = 2.0 * M_PI * p[1];
        double t = spec.T * (0.02 + 0.98 * p[2]);
        vals[i] = std::abs(U.boundary_residual(e, x, th, t));
      });
      for (double v : vals) row.boundary = std::max(row.boundary, v);
    }
    row.interior = std::max({row.arm, row.band, row.node});
    rep.rows.push_back(row);
  }

  std::vector<double> eps, inte, bnd;
  for (const auto& r : rep.rows) {
    eps.push_back(r.eps);
    inte.push_back(r.interior);
    bnd.push_back(r.boundary);
  }
  double imax = 0.0, bmax = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    imax = std::max(imax, inte[i]);
    bmax = std::max(bmax, bnd[i]);
  }
  rep.interior_zero = imax <= 1e-18;
  rep.boundary_zero = bmax <= 1e-18;
  rep.slope_interior = rep.interior_zero ? 0.0 : fit_slope(eps, inte);
  rep.slope_boundary = rep.boundary_zero ? 0.0 : fit_slope(eps, bnd);
  return rep;
}

void ErrorReport::write_csv(std::ostream& out) const {
  out << "M,eps,sup_error,grad_error_scaled,mesh_error,order_fit\n";
  char buf[192];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.17g,%.17g,%.17g,\n", M, r.eps, r.sup_error,
                  r.grad_error_scaled, r.mesh_error);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%d,,,,,%.17g\n", M, order_fit);
  out << buf;
  out << "# inconclusive," << (inconclusive ? 1 : 0) << "\n";
}

ErrorReport error_study(std::shared_ptr<const CoefficientSet> coeffs, int M,
                        const std::vector<double>& eps_list, std::uint64_t seed, int refine,
                        int n_probes) {
  ErrorReport rep;
  rep.M = M;
  const JunctionSpec& spec = *coeffs->spec;
  double hmin = 1e300;
  for (const auto& e : spec.edges)
    for (int i = 0; i <= 20; ++i) hmin = std::min(hmin, e.h(e.length * i / 20.0));

  for (double eps : eps_list) {
    PartialSum U = assemble_partial_sum(coeffs, eps, M - 1);
    double dx = eps * hmin / refine;

    // Probes strictly inside: margin of two coarse cells from the walls.
    Sobol sob(4, seed + 7);
    std::vector<std::array<double, 4>> probes;
    std::uint64_t idx = 0;
    while (probes.size() < static_cast<std::size_t>(n_probes) && idx < 80u * n_probes) {
      auto p = sob.point(idx++);
      int e = static_cast<int>(p[0] * 3.0);
      e = std::min(e, 2);
      const EdgeSpec& es = spec.edges[static_cast<std::size_t>(e)];
      double x = 3.0 * spec.node.ell0 * std::pow(eps, spec.gamma) +
                 (es.length * 0.98 - 3.0 * spec.node.ell0 * std::pow(eps, spec.gamma)) * p[1];
      double rmax = eps * es.h(x) - 2.5 * dx;
      if (rmax <= 0.0) continue;
      double r = rmax * std::sqrt(p[2]);
      double th = 2.0 * M_PI * (p[0] * 3.0 - e);
      double t = spec.T * (0.3 + 0.7 * p[3]);
      int t1, t2;
      transverse_axes(e, t1, t2);
      std::array<double, 4> pt{};
      pt[static_cast<std::size_t>(e)] = x;
      pt[static_cast<std::size_t>(t1)] = r * std::cos(th);
      pt[static_cast<std::size_t>(t2)] = r * std::sin(th);
      pt[3] = t;
      probes.push_back(pt);
    }

    VoxelMesh mesh = VoxelMesh::build(spec, eps, dx);
    double dt = 0.12 * dx;
    FullSolution sol;
    for (;;) {
      try {
        sol = solve_full(spec, eps, mesh, dt, spec.T, 9);
        break;
      } catch (const std::invalid_argument&) {
        dt *= 0.5;
        if (dt < 1e-9) throw;
      }
    }

    ErrorRow row;
    row.eps = eps;
    for (const auto& pq : probes) {
      std::array<double, 3> x{pq[0], pq[1], pq[2]};
      double diff = std::abs(sol.probe(x, pq[3]) - U.eval(x, pq[3]));
      row.sup_error = std::max(row.sup_error, diff);
    }

    // Scaled space-time gradient error on snapshot times.
    double acc = 0.0;
    double vol = mesh.cell_volume();
    for (std::size_t it = 1; it < sol.snapshot_times.size(); ++it) {
      double tdt = sol.snapshot_times[it] - sol.snapshot_times[it - 1];
      double g2 = 0.0;
      for (std::size_t c = 0; c < mesh.n_cells(); c += 2) {
        auto grad = U.eval_with_gradient(mesh.center(c), sol.snapshot_times[it]);
        for (int a = 0; a < 3; ++a) {
          std::int32_t nb = mesh.neighbor(c, a, +1);
          if (nb < 0) continue;
          double du = (sol.snapshots[it][static_cast<std::size_t>(nb)] -
                       sol.snapshots[it][static_cast<std::size_t>(c)]) /
                      mesh.dx();
          double d = du - grad.grad[static_cast<std::size_t>(a)];
          g2 += d * d * vol * 2.0;  // every 2nd cell sampled
        }
      }
      acc += g2 * tdt;
    }
    double volume = static_cast<double>(mesh.n_cells()) * vol;
    row.grad_error_scaled = std::sqrt(acc / std::max(volume, 1e-300));

    // Mesh self-error at the same probes from a finer solve.
    {
      double dx2 = dx / 1.5;
      VoxelMesh mesh2 = VoxelMesh::build(spec, eps, dx2);
      double dt2 = dt / 1.5;
      FullSolution sol2;
      for (;;) {
        try {
          sol2 = solve_full(spec, eps, mesh2, dt2, spec.T, 9);
          break;
        } catch (const std::invalid_argument&) {
          dt2 *= 0.5;
        }
      }
      for (const auto& pq : probes) {
        std::array<double, 3> x{pq[0], pq[1], pq[2]};
        row.mesh_error =
            std::max(row.mesh_error, std::abs(sol.probe(x, pq[3]) - sol2.probe(x, pq[3])));
      }
    }
    rep.rows.push_back(row);
  }

  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].sup_error > rep.rows[i - 1].sup_error) rep.decreasing = false;
  if (rep.rows.size() >= 2) {
    const ErrorRow& a = rep.rows.front();
    const ErrorRow& b = rep.rows.back();
    double ea = std::max(a.sup_error - a.mesh_error, 1e-300);
    double eb = std::max(b.sup_error - b.mesh_error, 1e-300);
    rep.order_fit = std::log(ea / eb) / std::log(a.eps / b.eps);
    double gap = std::abs(a.sup_error - b.sup_error);
    double me = std::max(a.mesh_error, b.mesh_error);
    rep.inconclusive = (gap <= 0.0) || (me > 0.5 * gap);
  }
  return rep;
}

}  // namespace junction
