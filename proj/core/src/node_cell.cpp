#include "junction/node_cell.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <cstring>
#include <ostream>

#include "junction/quadrature.hpp"

namespace junction {

namespace {

inline void transverse_axes(int axis, int& t1, int& t2) {
  switch (axis) {
    case 0: t1 = 1; t2 = 2; break;
    case 1: t1 = 0; t2 = 2; break;
    default: t1 = 0; t2 = 1; break;
  }
}

struct TW {
  std::size_t i0;
  double w[4];
};

TW time_weights(const std::vector<double>& tn, double t, int deriv) {
  TW out{};
  const std::size_t n = tn.size();
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
    } else {
      for (int m = 0; m < 4; ++m) {
        if (m == j) continue;
        double term = 1.0;
        for (int p = 0; p < 4; ++p)
          if (p != j && p != m) term *= (t - nodes[p]);
        v += term;
      }
    }
    out.w[j] = v / prod;
  }
  return out;
}

double panels8(const std::function<double(double)>& f, double a, double b) {
  double acc = 0.0;
  const int np = 8;
  for (int i = 0; i < np; ++i) {
    double x0 = a + (b - a) * i / np, x1 = a + (b - a) * (i + 1) / np;
    acc += gauss_legendre(f, x0, x1, 8);
  }
  return acc;
}

double fade_poly(double s) { return ((6.0 * s - 15.0) * s + 10.0) * s * s * s; }

}  // namespace

// ---------------------------------------------------------------------------
// Context
// ---------------------------------------------------------------------------

class NodeLayerContext {
 public:
  std::shared_ptr<const JunctionSpec> spec;
  std::shared_ptr<const NodeMesh> mesh;
  std::shared_ptr<const NodePotential> pot;
  SmoothStep chi;
  double L_tr = 8.0;
  bool has_cross = false;

  std::vector<std::array<double, 3>> vel;
  std::vector<std::array<std::array<double, 3>, 3>> diff;

  Eigen::SparseMatrix<double> A;
  std::shared_ptr<Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>>
      solver;

  double arm_radius(int a) const { return spec->node.h0[static_cast<std::size_t>(a)]; }
  double speed(int a) const { return spec->edges[static_cast<std::size_t>(a)].v0(); }

  void build(std::shared_ptr<const JunctionSpec> s, std::shared_ptr<const NodePotential> p,
             double Ltr);

  bool near_truncation(std::size_t c, int a) const {
    return mesh->arm_of(c) == a &&
           mesh->center(c)[static_cast<std::size_t>(a)] >
               spec->node.ell0 + L_tr - 1.5 * mesh->dx();
  }

  std::vector<double> apply_analytic(
      const std::function<double(const std::array<double, 3>&)>& f) const;
  std::vector<double> solve(Eigen::VectorXd rhs, const double* guess = nullptr) const;

 private:
  Eigen::VectorXd cross_flux(const Eigen::VectorXd& x) const;
};

void NodeLayerContext::build(std::shared_ptr<const JunctionSpec> s,
                             std::shared_ptr<const NodePotential> p, double Ltr) {
  spec = std::move(s);
  pot = std::move(p);
  L_tr = Ltr;
  chi = SmoothStep{1.0 + spec->node.ell0, 2.0 + spec->node.ell0};
  double dx = std::min({spec->node.h0[0], spec->node.h0[1], spec->node.h0[2]}) /
              spec->numerics.voxel_div;
  mesh = std::make_shared<NodeMesh>(NodeMesh::build(spec->node.shape(), dx, L_tr));

  const std::size_t n = mesh->n_cells();
  vel.resize(n);
  diff.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& xi = mesh->center(c);
    int arm = mesh->arm_of(c);
    auto& D = diff[c];
    for (auto& row : D) row = {0.0, 0.0, 0.0};
    if (arm >= 0) {
      vel[c] = {0, 0, 0};
      vel[c][static_cast<std::size_t>(arm)] = speed(arm);
      const EdgeSpec& e = spec->edges[static_cast<std::size_t>(arm)];
      int t1, t2;
      transverse_axes(arm, t1, t2);
      double u1 = xi[static_cast<std::size_t>(t1)], u2 = xi[static_cast<std::size_t>(t2)];
      double b11 = e.a11.eval({u1, u2}), b12 = e.a12.eval({u1, u2}), b22 = e.a22.eval({u1, u2});
      D[static_cast<std::size_t>(arm)][static_cast<std::size_t>(arm)] = e.a_axial;
      D[static_cast<std::size_t>(t1)][static_cast<std::size_t>(t1)] = b11;
      D[static_cast<std::size_t>(t1)][static_cast<std::size_t>(t2)] = b12;
      D[static_cast<std::size_t>(t2)][static_cast<std::size_t>(t1)] = b12;
      D[static_cast<std::size_t>(t2)][static_cast<std::size_t>(t2)] = b22;
      if (b12 != 0.0) has_cross = true;
    } else {
      vel[c] = pot->velocity(xi);
      double D3[3][3];
      spec->node.diffusion_matrix(xi, D3);
      for (int r = 0; r < 3; ++r)
        for (int q = 0; q < 3; ++q) {
          D[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)] = D3[r][q];
          if (r != q && D3[r][q] != 0.0) has_cross = true;
        }
    }
  }

  const double h = mesh->dx();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(n * 8);
  for (std::size_t c = 0; c < n; ++c) {
    double diag = 0.0;
    for (int a = 0; a < 3; ++a) {
      double Daa = diff[c][static_cast<std::size_t>(a)][static_cast<std::size_t>(a)];
      for (int d = -1; d <= 1; d += 2) {
        std::int32_t nb = mesh->neighbor(c, a, d);
        if (nb >= 0) {
          double Dn = diff[static_cast<std::size_t>(nb)][static_cast<std::size_t>(a)]
                          [static_cast<std::size_t>(a)];
          double w = 0.5 * (Daa + Dn) / (h * h);
          trips.emplace_back(static_cast<int>(c), nb, -w);
          diag += w;
        } else if (d > 0 && near_truncation(c, a)) {
          diag += 2.0 * Daa / (h * h);  // ghost = -N_c (Dirichlet 0)
        }
      }
      double va = vel[c][static_cast<std::size_t>(a)];
      if (va != 0.0) {
        int updir = va > 0.0 ? -1 : +1;
        std::int32_t up = mesh->neighbor(c, a, updir);
        if (up >= 0) {
          double w = std::abs(va) / h;
          diag += w;
          trips.emplace_back(static_cast<int>(c), up, -w);
        } else if (updir > 0 && near_truncation(c, a)) {
          diag += std::abs(va) / h;  // inflow from the Dirichlet-0 ghost
        }
        // Missing upstream through a lateral face: V.nu vanishes there, drop.
      }
    }
    trips.emplace_back(static_cast<int>(c), static_cast<int>(c), diag);
  }
  A.resize(static_cast<int>(n), static_cast<int>(n));
  A.setFromTriplets(trips.begin(), trips.end());
  solver = std::make_shared<
      Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>>();
  solver->preconditioner().setDroptol(1e-4);
  solver->preconditioner().setFillfactor(12);
  solver->setTolerance(1e-12);
  solver->setMaxIterations(4000);
  solver->compute(A);
}

Eigen::VectorXd NodeLayerContext::cross_flux(const Eigen::VectorXd& x) const {
  // -div of the off-diagonal diffusive flux, deferred-correction style.
  const std::size_t n = mesh->n_cells();
  const double h = mesh->dx();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<int>(n));
  auto grad_comp = [&](std::size_t c, int b) {
    std::int32_t m = mesh->neighbor(c, b, -1), p = mesh->neighbor(c, b, +1);
    double xc = x[static_cast<int>(c)];
    if (m >= 0 && p >= 0) return (x[p] - x[m]) / (2 * h);
    if (p >= 0) return (x[p] - xc) / h;
    if (m >= 0) return (xc - x[m]) / h;
    return 0.0;
  };
  for (std::size_t c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
      for (int d = -1; d <= 1; d += 2) {
        std::int32_t nb = mesh->neighbor(c, a, d);
        if (nb < 0) continue;  // boundary faces carry the prescribed flux only
        for (int b = 0; b < 3; ++b) {
          if (b == a) continue;
          double Dab = 0.5 * (diff[c][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +
                              diff[static_cast<std::size_t>(nb)][static_cast<std::size_t>(a)]
                                  [static_cast<std::size_t>(b)]);
          if (Dab == 0.0) continue;
          double gb = 0.5 * (grad_comp(c, b) + grad_comp(static_cast<std::size_t>(nb), b));
          acc -= d * Dab * gb / h;  // -(1/vol)*flux*face_area
        }
      }
    }
    out[static_cast<int>(c)] = acc;
  }
  return out;
}

std::vector<double> NodeLayerContext::solve(Eigen::VectorXd rhs, const double* guess) const {
  Eigen::VectorXd x;
  if (guess) {
    Eigen::Map<const Eigen::VectorXd> g(guess, rhs.size());
    x = solver->solveWithGuess(rhs, g);
  } else {
    x = solver->solve(rhs);
  }
  if (solver->info() != Eigen::Success && solver->error() > 1e-8)
    throw std::runtime_error("node-layer BiCGSTAB did not converge (error " +
                             std::to_string(solver->error()) + ")");
  if (has_cross) {
    for (int it = 0; it < 8; ++it) {
      Eigen::VectorXd corr = rhs - cross_flux(x);
      Eigen::VectorXd xn = solver->solve(corr);
      double delta = (xn - x).lpNorm<Eigen::Infinity>();
      x = xn;
      if (delta < 1e-10 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) break;
    }
  }
  return std::vector<double>(x.data(), x.data() + x.size());
}

std::vector<double> NodeLayerContext::apply_analytic(
    const std::function<double(const std::array<double, 3>&)>& f) const {
  const std::size_t n = mesh->n_cells();
  const double h = mesh->dx();
  std::vector<double> fc(n);
  for (std::size_t c = 0; c < n; ++c) fc[c] = f(mesh->center(c));
  std::vector<double> out(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& xi = mesh->center(c);
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
      double Daa = diff[c][static_cast<std::size_t>(a)][static_cast<std::size_t>(a)];
      for (int d = -1; d <= 1; d += 2) {
        std::int32_t nb = mesh->neighbor(c, a, d);
        double fnb, Dn = Daa;
        if (nb >= 0) {
          fnb = fc[static_cast<std::size_t>(nb)];
          Dn = diff[static_cast<std::size_t>(nb)][static_cast<std::size_t>(a)]
                   [static_cast<std::size_t>(a)];
        } else {
          std::array<double, 3> xin = xi;
          xin[static_cast<std::size_t>(a)] += d * h;
          fnb = f(xin);
        }
        acc -= 0.5 * (Daa + Dn) * (fnb - fc[c]) / (h * h);
      }
      double va = vel[c][static_cast<std::size_t>(a)];
      if (va != 0.0) {
        int updir = va > 0.0 ? -1 : +1;
        std::int32_t up = mesh->neighbor(c, a, updir);
        double fup;
        if (up >= 0) {
          fup = fc[static_cast<std::size_t>(up)];
        } else {
          std::array<double, 3> xiu = xi;
          xiu[static_cast<std::size_t>(a)] += updir * h;
          fup = f(xiu);
        }
        acc += std::abs(va) * (fc[c] - fup) / h;
      }
    }
    out[c] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------

std::array<double, 3> NodePotential::velocity(const std::array<double, 3>& xi) const {
  const double h = mesh->dx();
  std::array<double, 3> out{0, 0, 0};
  std::array<double, 3> base;
  std::array<int, 3> i0;
  for (int a = 0; a < 3; ++a) {
    double s = xi[static_cast<std::size_t>(a)] / h - 0.5;
    i0[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(s));
    base[static_cast<std::size_t>(a)] = s - i0[static_cast<std::size_t>(a)];
  }
  std::int32_t fallback = mesh->cell_at(xi);
  for (int comp = 0; comp < 3; ++comp) {
    double acc = 0.0, wacc = 0.0;
    for (int dz = 0; dz <= 1; ++dz)
      for (int dy = 0; dy <= 1; ++dy)
        for (int dxi = 0; dxi <= 1; ++dxi) {
          std::array<double, 3> p{(i0[0] + dxi + 0.5) * h, (i0[1] + dy + 0.5) * h,
                                  (i0[2] + dz + 0.5) * h};
          std::int32_t c = mesh->cell_at(p);
          if (c < 0) continue;
          double w = (dxi ? base[0] : 1 - base[0]) * (dy ? base[1] : 1 - base[1]) *
                     (dz ? base[2] : 1 - base[2]);
          acc += w * grad[static_cast<std::size_t>(comp)][static_cast<std::size_t>(c)];
          wacc += w;
        }
    if (wacc > 1e-12) {
      out[static_cast<std::size_t>(comp)] = acc / wacc;
    } else if (fallback >= 0) {
      out[static_cast<std::size_t>(comp)] =
          grad[static_cast<std::size_t>(comp)][static_cast<std::size_t>(fallback)];
    }
  }
  return out;
}

NodePotential solve_potential(const NodeSpec& node, const std::array<double, 3>& vertex_speeds,
                              int voxel_div) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    s += node.h0[static_cast<std::size_t>(i)] * node.h0[static_cast<std::size_t>(i)] *
         vertex_speeds[static_cast<std::size_t>(i)];
  if (std::abs(s) > 1e-10)
    throw std::invalid_argument(
        "solve_potential: conservation condition violated (sum h^2 v = " + std::to_string(s) +
        ")");

  NodePotential pot;
  double dx = std::min({node.h0[0], node.h0[1], node.h0[2]}) / voxel_div;
  auto mesh = std::make_shared<NodeMesh>(NodeMesh::build(node.shape(), dx, 0.0));
  pot.mesh = mesh;
  const std::size_t n = mesh->n_cells();
  const double h = mesh->dx();

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(n));
  for (std::size_t c = 0; c < n; ++c) {
    double diag = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int d = -1; d <= 1; d += 2) {
        std::int32_t nb = mesh->neighbor(c, a, d);
        if (nb >= 0) {
          trips.emplace_back(static_cast<int>(c), nb, -1.0 / (h * h));
          diag += 1.0 / (h * h);
        }
      }
    trips.emplace_back(static_cast<int>(c), static_cast<int>(c), diag);
  }
  double net_flux = 0.0;
  for (const auto& f : mesh->facets()) {
    if (f.tag != FacetTag::Portal) continue;
    double data = vertex_speeds[static_cast<std::size_t>(f.arm)];
    b[f.cell] += data * f.weight / (h * h * h);
    net_flux += data * f.weight;
  }
  pot.flux_balance = net_flux;

  Eigen::SparseMatrix<double> A(static_cast<int>(n), static_cast<int>(n));
  A.setFromTriplets(trips.begin(), trips.end());
  b.array() -= b.sum() / static_cast<double>(n);

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(20000);
  cg.compute(A);
  Eigen::VectorXd x = cg.solve(b);
  pot.cg_residual = (A * x - b).norm() / std::max(1e-300, b.norm());

  x.array() -= x.sum() / static_cast<double>(n);
  pot.p.assign(x.data(), x.data() + x.size());

  for (int a = 0; a < 3; ++a) pot.grad[static_cast<std::size_t>(a)].assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (int a = 0; a < 3; ++a) {
      std::int32_t nm = mesh->neighbor(c, a, -1), np = mesh->neighbor(c, a, +1);
      double g;
      if (nm >= 0 && np >= 0)
        g = (pot.p[static_cast<std::size_t>(np)] - pot.p[static_cast<std::size_t>(nm)]) /
            (2.0 * h);
      else if (np >= 0)
        g = (pot.p[static_cast<std::size_t>(np)] - pot.p[c]) / h;
      else if (nm >= 0)
        g = (pot.p[c] - pot.p[static_cast<std::size_t>(nm)]) / h;
      else
        g = 0.0;
      pot.grad[static_cast<std::size_t>(a)][c] = g;
    }
  }
  double mx = 0.0;
  for (const auto& f : mesh->facets()) {
    if (f.tag != FacetTag::Gamma0 || f.weight == 0.0) continue;
    double vn = 0.0;
    for (int a = 0; a < 3; ++a)
      vn += pot.grad[static_cast<std::size_t>(a)][static_cast<std::size_t>(f.cell)] *
            f.normal[static_cast<std::size_t>(a)];
    mx = std::max(mx, std::abs(vn));
  }
  pot.max_gamma0_normal = mx;
  return pot;
}

// ---------------------------------------------------------------------------
// FarFieldData
// ---------------------------------------------------------------------------

double FarFieldData::trace_at(int arm, double t, int tderiv) const {
  const Profile1D& p = trace[static_cast<std::size_t>(arm)];
  if (!p.valid()) return 0.0;
  return p.deriv(t, tderiv);
}

double FarFieldData::psi_at(int arm, double xi, double t, int tderiv) const {
  const auto& coeffs = psi[static_cast<std::size_t>(arm)];
  double acc = 0.0, xp = xi;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    if (coeffs[j].valid()) acc += coeffs[j].deriv(t, tderiv) * xp;
    xp *= xi;
  }
  return acc;
}

double FarFieldData::psi_dxi(int arm, double xi, double t, int tderiv) const {
  const auto& coeffs = psi[static_cast<std::size_t>(arm)];
  double acc = 0.0, xp = 1.0;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    if (coeffs[j].valid())
      acc += coeffs[j].deriv(t, tderiv) * static_cast<double>(j + 1) * xp;
    xp *= xi;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// NodeField
// ---------------------------------------------------------------------------

double NodeField::tilde_at_sample(std::size_t it, std::size_t cell) const {
  if (zero_) return 0.0;
  return tilde_[it][cell];
}

double NodeField::analytic_part(const std::array<double, 3>& xi, double t) const {
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    double xia = xi[static_cast<std::size_t>(a)];
    double chi = ctx_->chi.value(xia);
    if (chi == 0.0) continue;
    acc += (far_.trace_at(a, t, tderiv) + far_.psi_at(a, xia, t, tderiv)) * chi;
  }
  return acc;
}

double NodeField::trilinear(const std::array<double, 3>& xi, double t,
                            bool with_analytic) const {
  const NodeMesh& mesh = *ctx_->mesh;
  const double h = mesh.dx();
  TW tw = time_weights(tsamples_, t, 0);
  std::array<int, 3> i0;
  std::array<double, 3> frac;
  for (int a = 0; a < 3; ++a) {
    double s = xi[static_cast<std::size_t>(a)] / h - 0.5;
    i0[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(s));
    frac[static_cast<std::size_t>(a)] = s - i0[static_cast<std::size_t>(a)];
  }
  double acc = 0.0, wacc = 0.0;
  for (int dz = 0; dz <= 1; ++dz)
    for (int dy = 0; dy <= 1; ++dy)
      for (int dxi = 0; dxi <= 1; ++dxi) {
        std::array<double, 3> p{(i0[0] + dxi + 0.5) * h, (i0[1] + dy + 0.5) * h,
                                (i0[2] + dz + 0.5) * h};
        std::int32_t c = mesh.cell_at(p);
        if (c < 0) continue;
        double w = (dxi ? frac[0] : 1 - frac[0]) * (dy ? frac[1] : 1 - frac[1]) *
                   (dz ? frac[2] : 1 - frac[2]);
        if (w == 0.0) continue;
        double v = 0.0;
        for (int j = 0; j < 4; ++j)
          v += tw.w[j] * tilde_[tw.i0 + static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
        if (with_analytic) v += analytic_part(p, t);
        acc += w * v;
        wacc += w;
      }
  if (wacc <= 0.0) return with_analytic ? analytic_part(xi, t) : 0.0;
  return acc / wacc;
}

double NodeField::fade(const std::array<double, 3>& xi) const {
  double ximax = std::max({xi[0], xi[1], xi[2]});
  double start = ctx_->spec->node.ell0 + ctx_->L_tr - 1.0;
  double end = ctx_->spec->node.ell0 + ctx_->L_tr;
  if (ximax >= end) return 0.0;
  if (ximax <= start) return 1.0;
  return 1.0 - fade_poly((ximax - start) / (end - start));
}

double NodeField::tilde(const std::array<double, 3>& xi, double t) const {
  if (zero_) return 0.0;
  if (ctx_->mesh->cell_at(xi) < 0) return 0.0;
  return trilinear(xi, t, false) * fade(xi);
}

double NodeField::value(const std::array<double, 3>& xi, double t) const {
  if (zero_) return 0.0;
  double f = fade(xi);
  if (f == 0.0 || ctx_->mesh->cell_at(xi) < 0) return analytic_part(xi, t);
  double full = trilinear(xi, t, true);
  if (f == 1.0) return full;
  return f * full + (1.0 - f) * analytic_part(xi, t);
}

std::array<double, 3> NodeField::grad(const std::array<double, 3>& xi, double t) const {
  std::array<double, 3> g{0, 0, 0};
  if (zero_) return g;
  const double h = ctx_->mesh->dx();
  double v0 = value(xi, t);
  for (int a = 0; a < 3; ++a) {
    std::array<double, 3> xp = xi, xm = xi;
    xp[static_cast<std::size_t>(a)] += h;
    xm[static_cast<std::size_t>(a)] -= h;
    bool okp = ctx_->mesh->cell_at(xp) >= 0, okm = ctx_->mesh->cell_at(xm) >= 0;
    if (okp && okm) {
      g[static_cast<std::size_t>(a)] = (value(xp, t) - value(xm, t)) / (2.0 * h);
    } else if (okp) {
      g[static_cast<std::size_t>(a)] = (value(xp, t) - v0) / h;
    } else if (okm) {
      g[static_cast<std::size_t>(a)] = (v0 - value(xm, t)) / h;
    } else {
      // Outside the stored band in the transverse directions: analytic only.
      double xia = xi[static_cast<std::size_t>(a)];
      double chi = ctx_->chi.value(xia), dchi = ctx_->chi.d1(xia);
      if (chi != 0.0 || dchi != 0.0) {
        double base = far_.trace_at(a, t, tderiv) + far_.psi_at(a, xia, t, tderiv);
        g[static_cast<std::size_t>(a)] = base * dchi + far_.psi_dxi(a, xia, t, tderiv) * chi;
      }
    }
  }
  return g;
}

double NodeField::arm_outer_sup(int arm) const {
  if (zero_) return 0.0;
  return outer_sup_[static_cast<std::size_t>(arm)];
}

double NodeField::arm_tilde_integral(int arm, double t, double* tail_bound) const {
  if (zero_) {
    if (tail_bound) *tail_bound = 0.0;
    return 0.0;
  }
  const NodeMesh& mesh = *ctx_->mesh;
  TW tw = time_weights(tsamples_, t, 0);
  double vol = mesh.cell_volume();
  double acc = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    if (mesh.arm_of(c) != arm) continue;
    double v = 0.0;
    for (int j = 0; j < 4; ++j)
      v += tw.w[j] * tilde_[tw.i0 + static_cast<std::size_t>(j)][c];
    acc += v * vol;
  }
  if (tail_bound) {
    double r = ctx_->arm_radius(arm);
    *tail_bound = outer_sup_[static_cast<std::size_t>(arm)] * M_PI * r * r;
  }
  return acc;
}

double NodeField::node_region_integral(double t) const {
  if (zero_) return 0.0;
  const NodeMesh& mesh = *ctx_->mesh;
  TW tw = time_weights(tsamples_, t, 0);
  double vol = mesh.cell_volume();
  double acc = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    if (mesh.arm_of(c) >= 0) continue;
    double v = 0.0;
    for (int j = 0; j < 4; ++j)
      v += tw.w[j] * tilde_[tw.i0 + static_cast<std::size_t>(j)][c];
    acc += v * vol;
  }
  return acc;  // chi vanishes on the node region, so tilde == N there
}

void NodeField::dump(std::ostream& out) const {
  out << "junction-asy node field\n";
  out << "order " << order << " tderiv " << tderiv << "\n";
  if (zero_) {
    out << "cells 0 tsamples 0 layout none\n";
    return;
  }
  out << "cells " << ctx_->mesh->n_cells() << " tsamples " << tsamples_.size()
      << " layout tilde[tsample][cell] little-endian float64\n";
  out << "binary\n";
  for (const auto& frame : tilde_)
    out.write(reinterpret_cast<const char*>(frame.data()),
              static_cast<std::streamsize>(frame.size() * sizeof(double)));
}

std::array<DecayFit, 3> decay_rate(const NodeField& field) {
  std::array<DecayFit, 3> fits{};
  if (field.zero()) {
    for (auto& f : fits) f.trivial = true;
    return fits;
  }
  const NodeLayerContext& ctx = *field.context();
  const NodeMesh& mesh = *ctx.mesh;
  double ell0 = ctx.spec->node.ell0, L = ctx.L_tr;
  const int nbins = 40;
  for (int arm = 0; arm < 3; ++arm) {
    std::vector<double> sup(nbins, 0.0);
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      if (mesh.arm_of(c) != arm) continue;
      double xi = mesh.center(c)[static_cast<std::size_t>(arm)];
      int b = static_cast<int>((xi - ell0) / L * nbins);
      if (b < 0 || b >= nbins) continue;
      for (std::size_t it = 0; it < field.tsamples().size(); ++it)
        sup[static_cast<std::size_t>(b)] =
            std::max(sup[static_cast<std::size_t>(b)], std::abs(field.tilde_at_sample(it, c)));
    }
    std::vector<double> xs, ys;
    for (int b = nbins / 4; b < 3 * nbins / 4; ++b) {
      if (sup[static_cast<std::size_t>(b)] <= 0.0) continue;
      xs.push_back(ell0 + (b + 0.5) * L / nbins);
      ys.push_back(std::log(sup[static_cast<std::size_t>(b)]));
    }
    DecayFit& f = fits[static_cast<std::size_t>(arm)];
    double peak = 0.0;
    for (double v : sup) peak = std::max(peak, v);
    if (peak < 1e-13 || xs.size() < 4) {
      f.trivial = true;
      continue;
    }
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icp = (sy - slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double r = ys[i] - (icp + slope * xs[i]);
      ss += r * r;
    }
    f.beta = -slope;
    f.fit_residual = std::sqrt(ss / n);
    f.decaying = f.beta > 0.0;
  }
  return fits;
}

NodeField make_synthetic_node_field(std::shared_ptr<const NodeLayerContext> ctx,
                                    int node_t_points, double T,
                                    const std::function<double(const std::array<double, 3>&,
                                                               double)>& tilde_fn) {
  NodeField f;
  f.zero_ = false;
  f.ctx_ = ctx;
  f.tsamples_.resize(static_cast<std::size_t>(node_t_points));
  for (int i = 0; i < node_t_points; ++i)
    f.tsamples_[static_cast<std::size_t>(i)] = T * i / (node_t_points - 1);
  const NodeMesh& mesh = *ctx->mesh;
  f.tilde_.assign(f.tsamples_.size(), std::vector<double>(mesh.n_cells(), 0.0));
  for (std::size_t it = 0; it < f.tsamples_.size(); ++it)
    for (std::size_t c = 0; c < mesh.n_cells(); ++c)
      f.tilde_[it][c] = tilde_fn(mesh.center(c), f.tsamples_[it]);
  return f;
}

// ---------------------------------------------------------------------------
// NodeLayerBuilder
// ---------------------------------------------------------------------------

struct NodeLayerBuilder::Lazy {
  std::shared_ptr<NodePotential> potential;
  std::shared_ptr<NodeLayerContext> ctx;
};

NodeLayerBuilder::NodeLayerBuilder(std::shared_ptr<const JunctionSpec> spec)
    : spec_(std::move(spec)), lazy_(std::make_shared<Lazy>()) {}

void NodeLayerBuilder::ensure_context() const {
  if (lazy_->ctx) return;
  std::array<double, 3> speeds{spec_->edges[0].v0(), spec_->edges[1].v0(),
                               spec_->edges[2].v0()};
  lazy_->potential = std::make_shared<NodePotential>(
      solve_potential(spec_->node, speeds, spec_->numerics.voxel_div));
  auto ctx = std::make_shared<NodeLayerContext>();
  ctx->build(spec_, lazy_->potential, spec_->numerics.L_tr);
  lazy_->ctx = ctx;
}

const NodePotential& NodeLayerBuilder::potential() const {
  ensure_context();
  return *lazy_->potential;
}

std::shared_ptr<const NodeLayerContext> NodeLayerBuilder::context() const {
  ensure_context();
  return lazy_->ctx;
}

double NodeLayerBuilder::node_flux_datum(double t) const {
  if (spec_->node.phi_node.is_zero()) return 0.0;
  ensure_context();
  return node_flux_average(spec_->node, *lazy_->ctx->mesh, t);
}

double NodeLayerBuilder::solvability_residual(const FarFieldData& far,
                                              const ScalarFn1& rhs) const {
  double worst = 0.0;
  int nt = spec_->numerics.node_t_points;
  for (int i = 0; i < nt; ++i) {
    double t = spec_->T * i / (nt - 1);
    double s = 0.0;
    for (int arm = 0; arm < 3; ++arm) {
      const EdgeSpec& e = spec_->edges[static_cast<std::size_t>(arm)];
      s += e.h0() * e.h0() * e.v0() * far.trace_at(arm, t);
    }
    worst = std::max(worst, std::abs(s - rhs(t)));
  }
  return worst;
}

std::vector<NodeField> NodeLayerBuilder::solve_Nk(int k, const FarFieldData& far,
                                                  const std::vector<NodeField>* prev,
                                                  int max_tderiv,
                                                  double solvability_tol) const {
  const Numerics& num = spec_->numerics;
  std::vector<double> ts(static_cast<std::size_t>(num.node_t_points));
  for (int i = 0; i < num.node_t_points; ++i)
    ts[static_cast<std::size_t>(i)] = spec_->T * i / (num.node_t_points - 1);

  if (k > 0 && !prev)
    throw std::invalid_argument("solve_Nk: previous-order fields required for k >= 1");
  if (k > 0 && prev->size() < static_cast<std::size_t>(max_tderiv) + 2)
    throw std::invalid_argument(
        "solve_Nk: need previous-order time derivatives one level deeper");

  bool zero = far.zero;
  if (k == 0 && !spec_->node.phi_node.is_zero()) zero = false;
  if (k > 0 && !(*prev)[0].zero()) zero = false;

  std::vector<NodeField> fields(static_cast<std::size_t>(max_tderiv) + 1);
  for (int d = 0; d <= max_tderiv; ++d) {
    NodeField& f = fields[static_cast<std::size_t>(d)];
    f.order = k;
    f.tderiv = d;
    f.far_ = far;
    f.tsamples_ = ts;
    f.zero_ = zero;
  }
  if (zero) return fields;

  ensure_context();
  auto ctx = lazy_->ctx;
  for (auto& f : fields) f.ctx_ = ctx;

  {
    ScalarFn1 rhs;
    std::shared_ptr<Profile1D> keep;
    if (k == 0) {
      const NodeSpec* node = &spec_->node;
      auto mesh = ctx->mesh;
      rhs = [node, mesh](double t) { return node_flux_average(*node, *mesh, t); };
    } else {
      keep = std::make_shared<Profile1D>(compute_dk(k, *prev, far));
      rhs = [keep](double t) { return keep->value(t); };
    }
    double resid = solvability_residual(far, rhs);
    if (resid > solvability_tol)
      throw std::runtime_error("node layer order " + std::to_string(k) +
                               ": solvability residual " + std::to_string(resid) +
                               " exceeds tolerance");
  }

  const NodeMesh& mesh = *ctx->mesh;
  const std::size_t n = mesh.n_cells();
  const double ell0 = spec_->node.ell0;

  for (int d = 0; d <= max_tderiv; ++d) {
    NodeField& f = fields[static_cast<std::size_t>(d)];
    f.tilde_.assign(ts.size(), std::vector<double>(n, 0.0));
    ExprFn phi_d;
    if (k == 0 && !spec_->node.phi_node.is_zero())
      phi_d = (d == 0) ? spec_->node.phi_node : spec_->node.phi_node.derivative("t", d);
    for (std::size_t it = 0; it < ts.size(); ++it) {
      double t = ts[it];
      auto analytic = [&](const std::array<double, 3>& xi) {
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) {
          double xia = xi[static_cast<std::size_t>(a)];
          double chi = ctx->chi.value(xia);
          if (chi == 0.0) continue;
          acc += (far.trace_at(a, t, d) + far.psi_at(a, xia, t, d)) * chi;
        }
        return acc;
      };
      std::vector<double> Lf = ctx->apply_analytic(analytic);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(n));
      for (std::size_t c = 0; c < n; ++c) rhs[static_cast<int>(c)] = -Lf[c];
      if (k > 0) {
        const NodeField& pn = (*prev)[static_cast<std::size_t>(d) + 1];
        if (!pn.zero())
          for (std::size_t c = 0; c < n; ++c)
            rhs[static_cast<int>(c)] -= pn.value(mesh.center(c), t);
      }
      if (k == 0 && phi_d.valid() && !phi_d.is_zero()) {
        const double vol = mesh.cell_volume();
        for (const auto& fc : mesh.facets()) {
          if (fc.tag != FacetTag::Gamma0 || fc.weight == 0.0) continue;
          double g = -phi_d.eval({fc.center[0], fc.center[1], fc.center[2], t});
          if (g != 0.0) rhs[fc.cell] += g * fc.weight / vol;
        }
      }
      if (rhs.lpNorm<Eigen::Infinity>() == 0.0) continue;
      const double* guess =
          (it > 0 && !f.tilde_[it - 1].empty()) ? f.tilde_[it - 1].data() : nullptr;
      f.tilde_[it] = ctx->solve(std::move(rhs), guess);
    }
    for (int arm = 0; arm < 3; ++arm) {
      double L = ctx->L_tr;
      double sup = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        if (mesh.arm_of(c) != arm) continue;
        if (mesh.center(c)[static_cast<std::size_t>(arm)] < ell0 + 0.9 * L) continue;
        for (std::size_t it = 0; it < ts.size(); ++it)
          sup = std::max(sup, std::abs(f.tilde_[it][c]));
      }
      f.outer_sup_[static_cast<std::size_t>(arm)] = sup;
    }
  }
  return fields;
}

Profile1D NodeLayerBuilder::compute_dk(int k, const std::vector<NodeField>& prev_fields,
                                       const FarFieldData& far_k) const {
  if (prev_fields.size() < 2)
    throw std::invalid_argument("compute_dk: needs N_{k-1} and its time derivative");
  const Numerics& num = spec_->numerics;
  const double ell0 = spec_->node.ell0;
  SmoothStep chi{1.0 + ell0, 2.0 + ell0};

  std::vector<double> ts(static_cast<std::size_t>(num.node_t_points)), vals(ts.size(), 0.0);
  for (std::size_t i = 0; i < ts.size(); ++i)
    ts[i] = spec_->T * static_cast<double>(i) / (num.node_t_points - 1);

  const NodeField& ndot = prev_fields[1];
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double t = ts[i];
    double acc = 0.0;
    acc -= ndot.node_region_integral(t) / M_PI;
    for (int arm = 0; arm < 3; ++arm) acc -= ndot.arm_tilde_integral(arm, t) / M_PI;
    for (int arm = 0; arm < 3; ++arm) {
      const EdgeSpec& e = spec_->edges[static_cast<std::size_t>(arm)];
      double h2 = e.h0() * e.h0();
      double t1 = panels8(
          [&](double xi) { return far_k.psi_at(arm, xi, t) * chi.d1(xi); }, 1.0 + ell0,
          2.0 + ell0);
      double t2 = panels8(
          [&](double xi) { return far_k.psi_dxi(arm, xi, t) * chi.d1(xi); }, 1.0 + ell0,
          2.0 + ell0);
      acc -= h2 * (e.v0() * t1 - e.a_axial * t2);
    }
    vals[i] = acc;
  }
  (void)k;
  return Profile1D::from_values(ts, vals);
}

}  // namespace junction
