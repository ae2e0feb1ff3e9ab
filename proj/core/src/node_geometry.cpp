#include "junction/node_geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace junction {

namespace {
inline void transverse_axes(int axis, int& t1, int& t2) {
  switch (axis) {
    case 0: t1 = 1; t2 = 2; break;
    case 1: t1 = 0; t2 = 2; break;
    default: t1 = 0; t2 = 1; break;
  }
}
}  // namespace

bool NodeShape::inside_node(const std::array<double, 3>& p) const {
  const double c = cube_halfwidth;
  if (std::abs(p[0]) < c && std::abs(p[1]) < c && std::abs(p[2]) < c) return true;
  for (int a = 0; a < 3; ++a) {
    if (p[a] >= c && p[a] < ell0) {
      int t1, t2;
      transverse_axes(a, t1, t2);
      if (p[t1] * p[t1] + p[t2] * p[t2] < h0[a] * h0[a]) return true;
    }
  }
  return false;
}

bool NodeShape::inside(const std::array<double, 3>& p, double arm_len) const {
  if (inside_node(p)) return true;
  for (int a = 0; a < 3; ++a) {
    if (p[a] >= ell0 && p[a] < ell0 + arm_len) {
      int t1, t2;
      transverse_axes(a, t1, t2);
      if (p[t1] * p[t1] + p[t2] * p[t2] < h0[a] * h0[a]) return true;
    }
  }
  return false;
}

double NodeShape::gamma0_area_analytic() const {
  const double side = 2.0 * cube_halfwidth;
  double area = 6.0 * side * side;
  for (int a = 0; a < 3; ++a) {
    area -= M_PI * h0[a] * h0[a];                                  // hole in the +a face
    area += 2.0 * M_PI * h0[a] * (ell0 - cube_halfwidth);          // stub lateral
  }
  return area;
}

NodeMesh::Key NodeMesh::key(int i, int j, int k) const {
  const std::int64_t B = 1 << 20;
  return (static_cast<std::int64_t>(i + (1 << 19))) +
         B * (static_cast<std::int64_t>(j + (1 << 19))) +
         B * B * (static_cast<std::int64_t>(k + (1 << 19)));
}

NodeMesh NodeMesh::build(const NodeShape& shape, double dx, double arm_len) {
  if (dx <= 0.0) throw std::invalid_argument("NodeMesh: dx must be positive");
  NodeMesh m;
  m.shape_ = shape;
  m.dx_ = dx;
  m.arm_len_ = arm_len;

  auto center_of = [dx](int i, int j, int k) {
    return std::array<double, 3>{(i + 0.5) * dx, (j + 0.5) * dx, (k + 0.5) * dx};
  };

  // Candidate index boxes: the cube plus one box per arm.
  const double c = shape.cube_halfwidth;
  const double xmax = shape.ell0 + arm_len;
  auto idx_lo = [dx](double x) { return static_cast<int>(std::floor(x / dx)) - 1; };
  auto idx_hi = [dx](double x) { return static_cast<int>(std::ceil(x / dx)) + 1; };

  auto scan_box = [&](const std::array<int, 3>& lo, const std::array<int, 3>& hi) {
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) {
          auto p = center_of(i, j, k);
          if (!shape.inside(p, arm_len)) continue;
          Key kk = m.key(i, j, k);
          if (m.lookup_.count(kk)) continue;
          m.lookup_.emplace(kk, static_cast<std::int32_t>(m.centers_.size()));
          m.centers_.push_back(p);
          m.ijk_.push_back({i, j, k});
        }
  };

  std::array<int, 3> lo{idx_lo(-c), idx_lo(-c), idx_lo(-c)}, hi{idx_hi(c), idx_hi(c), idx_hi(c)};
  scan_box(lo, hi);
  for (int a = 0; a < 3; ++a) {
    int t1, t2;
    transverse_axes(a, t1, t2);
    std::array<int, 3> alo{}, ahi{};
    alo[a] = idx_lo(c);
    ahi[a] = idx_hi(xmax);
    alo[t1] = idx_lo(-shape.h0[a]);
    ahi[t1] = idx_hi(shape.h0[a]);
    alo[t2] = idx_lo(-shape.h0[a]);
    ahi[t2] = idx_hi(shape.h0[a]);
    scan_box(alo, ahi);
  }

  const std::size_t n = m.centers_.size();
  m.neighbors_.assign(n * 6, -1);
  m.arm_.assign(n, -1);
  for (std::size_t cidx = 0; cidx < n; ++cidx) {
    const auto& ijk = m.ijk_[cidx];
    const auto& p = m.centers_[cidx];
    for (int a = 0; a < 3; ++a) {
      if (p[a] > shape.ell0) {
        int t1, t2;
        transverse_axes(a, t1, t2);
        if (p[t1] * p[t1] + p[t2] * p[t2] < shape.h0[a] * shape.h0[a]) {
          m.arm_[cidx] = static_cast<std::int8_t>(a);
        }
      }
    }
    for (int a = 0; a < 3; ++a) {
      for (int d = 0; d < 2; ++d) {
        std::array<int, 3> nb = ijk;
        nb[a] += d ? 1 : -1;
        auto it = m.lookup_.find(m.key(nb[0], nb[1], nb[2]));
        if (it != m.lookup_.end()) m.neighbors_[cidx * 6 + a * 2 + d] = it->second;
      }
    }
  }

  // Boundary facets with true-normal-projected weights.
  const double face_area = dx * dx;
  for (std::size_t cidx = 0; cidx < n; ++cidx) {
    const auto& p = m.centers_[cidx];
    for (int a = 0; a < 3; ++a) {
      for (int d = 0; d < 2; ++d) {
        if (m.neighbor(cidx, a, d ? +1 : -1) >= 0) continue;
        BoundaryFacet f;
        f.cell = static_cast<std::int32_t>(cidx);
        f.axis = static_cast<std::int8_t>(a);
        f.dir = static_cast<std::int8_t>(d ? +1 : -1);
        f.center = p;
        f.center[a] += 0.5 * dx * f.dir;
        f.arm = -1;

        // Which analytic patch does this facet sit on?
        int host = -1;  // arm/stub axis the facet center belongs to, if any
        for (int b = 0; b < 3; ++b) {
          if (f.center[b] > c - 1e-12) {
            int t1, t2;
            transverse_axes(b, t1, t2);
            double r2 = f.center[t1] * f.center[t1] + f.center[t2] * f.center[t2];
            if (r2 < shape.h0[b] * shape.h0[b] + 1e-12) host = b;
          }
        }

        if (host >= 0 && a == host && f.dir > 0) {
          // Axial end of a stub (portal) or of a truncated arm.
          f.tag = (arm_len == 0.0) ? FacetTag::Portal : FacetTag::Truncation;
          f.arm = static_cast<std::int8_t>(host);
          f.normal = {0, 0, 0};
          f.normal[a] = 1.0;
          f.weight = face_area;
        } else if (host >= 0 && a != host) {
          // Lateral surface of a stub (Gamma0) or an arm (Lateral).
          int t1, t2;
          transverse_axes(host, t1, t2);
          double r = std::hypot(f.center[t1], f.center[t2]);
          f.normal = {0, 0, 0};
          if (r > 0) {
            f.normal[t1] = f.center[t1] / r;
            f.normal[t2] = f.center[t2] / r;
          }
          double proj = f.normal[a] * f.dir;
          f.weight = face_area * std::max(0.0, proj);
          bool in_arm = f.center[host] > shape.ell0;
          f.tag = in_arm ? FacetTag::Lateral : FacetTag::Gamma0;
          f.arm = static_cast<std::int8_t>(host);
          if (!in_arm) f.arm = static_cast<std::int8_t>(host);
        } else {
          // Cube face.
          f.tag = FacetTag::Gamma0;
          f.normal = {0, 0, 0};
          f.normal[a] = f.dir;
          f.weight = face_area;
        }
        if (f.tag == FacetTag::Gamma0) m.gamma0_area_ += f.weight;
        m.facets_.push_back(f);
      }
    }
  }
  return m;
}

std::int32_t NodeMesh::cell_at(const std::array<double, 3>& p) const {
  int i = static_cast<int>(std::floor(p[0] / dx_));
  int j = static_cast<int>(std::floor(p[1] / dx_));
  int k = static_cast<int>(std::floor(p[2] / dx_));
  auto it = lookup_.find(key(i, j, k));
  return it == lookup_.end() ? -1 : it->second;
}

}  // namespace junction
