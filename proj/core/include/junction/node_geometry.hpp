#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace junction {

/// Canonical rescaled node: cube [-c,c]^3 plus three axis-aligned stubs
/// {xi_i in [c, l0], |xibar_i| < h_i}, with semi-infinite arms
/// {xi_i > l0, |xibar_i| < h_i} truncated at l0 + arm_len when meshed.
struct NodeShape {
  double cube_halfwidth = 0.25;
  double ell0 = 0.3;
  std::array<double, 3> h0{0.2, 0.2, 0.2};

  bool inside_node(const std::array<double, 3>& p) const;
  bool inside(const std::array<double, 3>& p, double arm_len) const;

  /// Analytic area of Gamma_0 (cube faces minus three portal disks plus stub
  /// lateral surfaces).
  double gamma0_area_analytic() const;
};

enum class FacetTag : std::uint8_t {
  Gamma0,       // node boundary away from the coupling disks
  Lateral,      // arm lateral surface (arm = axis)
  Portal,       // coupling disk at xi_axis = l0 (node-only meshes)
  Truncation,   // artificial far face of a truncated arm
};

struct BoundaryFacet {
  std::int32_t cell;
  std::int8_t axis;   // 0..2
  std::int8_t dir;    // +1 or -1, outward
  FacetTag tag;
  std::int8_t arm;    // arm index for Lateral/Portal/Truncation, else -1
  double weight;      // dx^2 * (outward facet dir . true surface normal)
  std::array<double, 3> center;
  std::array<double, 3> normal;  // true surface normal estimate
};

/// Cell-centered voxelization of the node (arm_len = 0) or of the node plus
/// truncated arms. Cell faces land on coordinate planes k*dx so symmetric
/// apertures voxelize to identical transverse masks.
class NodeMesh {
 public:
  static NodeMesh build(const NodeShape& shape, double dx, double arm_len);

  std::size_t n_cells() const { return centers_.size(); }
  double dx() const { return dx_; }
  const NodeShape& shape() const { return shape_; }
  double arm_len() const { return arm_len_; }
  const std::array<double, 3>& center(std::size_t c) const { return centers_[c]; }

  /// Neighbor cell id or -1 when the face is on the boundary.
  std::int32_t neighbor(std::size_t c, int axis, int dir) const {
    return neighbors_[c * 6 + static_cast<std::size_t>(axis) * 2 +
                      static_cast<std::size_t>(dir > 0)];
  }

  const std::vector<BoundaryFacet>& facets() const { return facets_; }

  /// Cell containing p, or -1.
  std::int32_t cell_at(const std::array<double, 3>& p) const;

  /// Arm index when the cell lies beyond xi_arm > l0, else -1 (node region).
  int arm_of(std::size_t c) const { return arm_[c]; }

  double cell_volume() const { return dx_ * dx_ * dx_; }
  double gamma0_area() const { return gamma0_area_; }

 private:
  using Key = std::int64_t;
  Key key(int i, int j, int k) const;

  NodeShape shape_;
  double dx_ = 0.0;
  double arm_len_ = 0.0;
  std::vector<std::array<double, 3>> centers_;
  std::vector<std::array<int, 3>> ijk_;
  std::vector<std::int32_t> neighbors_;
  std::vector<std::int8_t> arm_;
  std::vector<BoundaryFacet> facets_;
  std::unordered_map<Key, std::int32_t> lookup_;
  double gamma0_area_ = 0.0;
};

}  // namespace junction
