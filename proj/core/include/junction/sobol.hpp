#pragma once

#include <array>
#include <cstdint>

namespace junction {

/// Sobol sequence in up to 6 dimensions with a seed-keyed digital shift;
/// deterministic for a given (seed, dimension, index).
class Sobol {
 public:
  explicit Sobol(int dim, std::uint64_t seed = 0);

  /// Point with index i (skips i = 0 internally so the origin never appears).
  std::array<double, 6> point(std::uint64_t i) const;

 private:
  int dim_;
  std::uint32_t shift_[6];
  std::uint32_t dirs_[6][32];
};

}  // namespace junction
