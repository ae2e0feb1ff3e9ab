#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "junction/composer.hpp"
#include "junction/reference_solver.hpp"

namespace junction {

struct ResidualRow {
  double eps;
  double arm = 0.0, band = 0.0, node = 0.0, interior = 0.0, boundary = 0.0;
};

struct ResidualReport {
  int M = 1;
  std::uint64_t seed = 0;
  int n_samples = 0;
  std::vector<ResidualRow> rows;
  double slope_interior = 0.0;
  double slope_boundary = 0.0;
  bool interior_zero = false;  // residual identically zero at samples
  bool boundary_zero = false;

  void write_csv(std::ostream& out) const;
};

/// Proposition-style residual sweep: quasi-random interior clouds per region
/// (arms, matching bands, node) and lateral boundary samples, sup per region
/// and log-log slope fits over the eps list (slopes need >= 3 points).
ResidualReport residual_study(std::shared_ptr<const CoefficientSet> coeffs, int M,
                              const std::vector<double>& eps_list, int n_samples,
                              std::uint64_t seed);

struct ErrorRow {
  double eps;
  double sup_error = 0.0;
  double grad_error_scaled = 0.0;
  double mesh_error = 0.0;  // self-refinement estimate at the probes
};

struct ErrorReport {
  int M = 1;  // compares U_{M-1} against the reference solve
  std::vector<ErrorRow> rows;
  double order_fit = 0.0;
  bool inconclusive = false;  // mesh error above half the observed gap
  bool decreasing = false;

  void write_csv(std::ostream& out) const;
};

/// Theorem-style error sweep against the full solver. refine divides
/// eps*h_min for the mesh spacing (4 = the coarsest admissible).
ErrorReport error_study(std::shared_ptr<const CoefficientSet> coeffs, int M,
                        const std::vector<double>& eps_list, std::uint64_t seed,
                        int refine = 4, int n_probes = 400);

}  // namespace junction
