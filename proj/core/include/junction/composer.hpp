#pragma once

#include <array>
#include <memory>
#include <optional>

#include "junction/boundary_layer.hpp"
#include "junction/disk_cell.hpp"
#include "junction/limit_graph.hpp"
#include "junction/node_cell.hpp"
#include "junction/steps.hpp"

namespace junction {

/// Matching and base cutoffs of the glued expansion. chi_match compares its
/// argument x_i/eps^gamma against [2 l0, 3 l0]; chi_base rises over
/// [l_e - 2 delta, l_e - delta] on each outlet edge.
struct CutoffSet {
  double gamma = 0.7;
  double delta = 0.1;
  double ell0 = 0.3;
  SmoothStep chi_match;
  std::array<std::optional<SmoothStep>, 3> chi_base;

  double match(double xi_scaled) const { return chi_match.value(xi_scaled); }
};

/// Raw construction; gamma must lie in (2/3, 1).
CutoffSet cutoffs(double gamma, double delta, double ell0);

/// Spec-validated construction: rejects a delta whose base band overlaps the
/// lateral-data support of an outlet edge.
CutoffSet make_cutoffs(const JunctionSpec& spec);

/// Every coefficient of the expansion through order M.
struct CoefficientSet {
  std::shared_ptr<const JunctionSpec> spec;
  int max_order = 0;
  LimitSolution limit;
  Profile1D breve_phi;
  std::vector<std::array<std::shared_ptr<const EdgeProfile>, 3>> w;  // [k][edge]
  std::vector<std::array<std::shared_ptr<const DiskField>, 3>> u;    // [k][edge], k=0 empty
  std::vector<std::vector<NodeField>> N;                             // [k][tderiv]
  std::vector<Profile1D> dk;                                         // d_1..d_M
  std::array<std::vector<std::shared_ptr<const BoundaryLayerTerm>>, 3> Pi;  // [edge][k]
  std::vector<double> kirchhoff;                                     // per order
  std::array<Profile2D, 3> phi_hat;

  bool has_layer(int edge) const { return !Pi[static_cast<std::size_t>(edge)].empty(); }
};

/// Solves the whole ladder w_k, u_k, N_k, Pi_k up to order M.
std::shared_ptr<const CoefficientSet> build_expansion(std::shared_ptr<const JunctionSpec> spec,
                                                      int M);

enum class Region { Node, Band, Arm, Outside };

struct EvalDerivatives {
  double value = 0.0;
  std::array<double, 3> grad{0, 0, 0};
};

/// The glued partial sum U_M(x, t; eps).
class PartialSum {
 public:
  PartialSum() = default;
  PartialSum(std::shared_ptr<const CoefficientSet> coeffs, double eps, int M);

  double eps() const { return eps_; }
  int order() const { return M_; }
  const CoefficientSet& coefficients() const { return *coeffs_; }
  const CutoffSet& cut() const { return cut_; }

  /// Membership in the thin junction for this eps.
  bool inside(const std::array<double, 3>& x) const;
  /// Host arm at x (longitudinal coordinate >= eps*l0), or -1 in the node.
  int host_arm(const std::array<double, 3>& x) const;
  Region classify(const std::array<double, 3>& x) const;

  double eval(const std::array<double, 3>& x, double t) const;
  EvalDerivatives eval_with_gradient(const std::array<double, 3>& x, double t) const;

  /// Interior residual of the eps-problem at a point, with all second-order
  /// fast-scale derivatives routed through the defining cell identities.
  double interior_residual(const std::array<double, 3>& x, double t) const;

  /// Lateral flux defect (-eps D grad U + U V).nu - eps phi at the point of
  /// the lateral surface of the given arm parameterized by (x_long, theta).
  double boundary_residual(int edge, double x_long, double theta, double t) const;

 private:
  struct ArmLocal;
  double arm_terms(const ArmLocal& loc, double t, bool with_pi, double* residual) const;

  std::shared_ptr<const CoefficientSet> coeffs_;
  double eps_ = 0.1;
  int M_ = 0;
  CutoffSet cut_;
};

/// assemble_partial_sum / zero_order per the composed-expansion contract.
PartialSum assemble_partial_sum(std::shared_ptr<const CoefficientSet> coeffs, double eps, int M);
PartialSum zero_order(std::shared_ptr<const CoefficientSet> coeffs, double eps);

}  // namespace junction
