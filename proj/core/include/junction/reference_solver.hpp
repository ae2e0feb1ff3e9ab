#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "junction/model.hpp"
#include "junction/node_cell.hpp"

namespace junction {

enum class FaceTag : std::uint8_t { LateralArm, NodeGamma0, DirichletBase };

struct MeshFace {
  std::int32_t cell;
  std::int8_t axis;
  std::int8_t dir;
  FaceTag tag;
  std::int8_t arm;      // edge index for LateralArm/DirichletBase
  double weight;        // projected true area
  std::array<double, 3> center;
  std::array<double, 3> normal;
};

/// Cell-centered voxelization of the eps-scaled junction.
class VoxelMesh {
 public:
  static VoxelMesh build(const JunctionSpec& spec, double eps, double dx);

  std::size_t n_cells() const { return centers_.size(); }
  double dx() const { return dx_; }
  double eps() const { return eps_; }
  const std::array<double, 3>& center(std::size_t c) const { return centers_[c]; }
  std::int32_t neighbor(std::size_t c, int axis, int dir) const {
    return neighbors_[c * 6 + static_cast<std::size_t>(axis) * 2 +
                      static_cast<std::size_t>(dir > 0)];
  }
  const std::vector<MeshFace>& boundary_faces() const { return faces_; }
  std::int32_t cell_at(const std::array<double, 3>& p) const;
  int arm_of(std::size_t c) const { return arm_[c]; }
  double cell_volume() const { return dx_ * dx_ * dx_; }
  double lateral_area(int arm) const { return lateral_area_[static_cast<std::size_t>(arm)]; }

 private:
  using Key = std::int64_t;
  Key key(int i, int j, int k) const;
  double dx_ = 0.0, eps_ = 0.1;
  std::vector<std::array<double, 3>> centers_;
  std::vector<std::array<int, 3>> ijk_;
  std::vector<std::int32_t> neighbors_;
  std::vector<std::int8_t> arm_;
  std::vector<MeshFace> faces_;
  std::unordered_map<Key, std::int32_t> lookup_;
  std::array<double, 3> lateral_area_{0, 0, 0};
};

/// Optional manufactured-solution hooks for verification runs.
struct SolverHooks {
  std::function<double(const std::array<double, 3>&, double)> volume_source;   // F(x,t)
  std::function<double(const std::array<double, 3>&, double, int)> base_value; // q override
  // Flux hooks receive the facet's true-surface normal estimate.
  std::function<double(const std::array<double, 3>&, const std::array<double, 3>&, double, int)>
      lateral_flux;
  std::function<double(const std::array<double, 3>&, const std::array<double, 3>&, double)>
      node_flux;
  std::function<double(const std::array<double, 3>&)> initial;
  bool zero_dirichlet = false;  // auxiliary problems of the a-priori estimates
  bool check_monotone = false;  // assert the advection substep adds no extrema
};

struct FullSolution {
  std::shared_ptr<const VoxelMesh> mesh;
  double dt = 0.0;
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;  // [time][cell]
  double mass_audit_max = 0.0;   // worst per-step relative defect
  double max_abs = 0.0;          // max |u| over the run
  double monotone_defect = 0.0;  // only with check_monotone
  double grad_l2_spacetime = 0.0;
  std::vector<std::array<double, 2>> flux_audit;  // (t, net boundary flux)

  double probe(const std::array<double, 3>& x, double t) const;
  double probe_snapshot(std::size_t it, const std::array<double, 3>& x) const;
};

/// Rejects dx above eps*h_min/4.
VoxelMesh mesh_junction(const JunctionSpec& spec, double eps, double dx);

/// First-order IMEX solve of the eps-problem: explicit upwind transport,
/// implicit two-point diffusion (cross terms lagged), flux data applied
/// through projected facet weights.
FullSolution solve_full(const JunctionSpec& spec, double eps, const VoxelMesh& mesh, double dt,
                        double T, int n_snapshots = 17, const SolverHooks* hooks = nullptr);

struct SweepReport {
  std::vector<double> eps;
  std::vector<double> ratio;      // max|psi| / source sup  (or gradient constant)
  double spread = 0.0;            // max ratio / min ratio over the sweep
  bool degenerate = false;        // all sources zero
};

/// Lemma-style empirical check: solves the auxiliary problem with sources
/// {F_i, Phi_i}, zero Dirichlet bases and zero initial data for each eps.
SweepReport max_principle_check(const JunctionSpec& spec,
                                const SolverHooks& sources, const std::vector<double>& eps_list,
                                double T, int refine = 4);

SweepReport energy_estimate_check(const JunctionSpec& spec, const SolverHooks& sources,
                                  const std::vector<double>& eps_list, double T,
                                  int refine = 4);

}  // namespace junction
