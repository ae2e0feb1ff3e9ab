#include "junction/sobol.hpp"

#include <stdexcept>

namespace junction {

namespace {

// Joe-Kuo initialisation for dimensions 2..6 (dimension 1 is van der Corput).
struct DimInit {
  int s;
  std::uint32_t a;
  std::uint32_t m[4];
};
const DimInit kInit[5] = {
    {1, 0, {1, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0}},
    {3, 1, {1, 3, 1, 0}},
    {3, 2, {1, 1, 1, 0}},
    {4, 1, {1, 1, 3, 3}},
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Sobol::Sobol(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 1 || dim > 6) throw std::invalid_argument("Sobol: 1..6 dimensions supported");
  for (int d = 0; d < dim_; ++d) {
    shift_[d] = seed == 0 ? 0u
                          : static_cast<std::uint32_t>(
                                splitmix64(seed * 0x9e37u + static_cast<std::uint64_t>(d)) >>
                                32);
    if (d == 0) {
      for (int b = 0; b < 32; ++b) dirs_[0][b] = 1u << (31 - b);
      continue;
    }
    const DimInit& ini = kInit[d - 1];
    // m_i = 2a_1 m_{i-1} xor 4a_2 m_{i-2} xor ... xor 2^s m_{i-s} xor m_{i-s}.
    std::uint32_t m[32];
    for (int i = 0; i < ini.s; ++i) m[i] = ini.m[i];
    for (int i = ini.s; i < 32; ++i) {
      std::uint32_t v = m[i - ini.s] ^ (m[i - ini.s] << ini.s);
      for (int k = 1; k < ini.s; ++k)
        if ((ini.a >> (ini.s - 1 - k)) & 1u) v ^= m[i - k] << k;
      m[i] = v;
    }
    for (int b = 0; b < 32; ++b) dirs_[d][b] = m[b] << (31 - b);
  }
}

std::array<double, 6> Sobol::point(std::uint64_t i) const {
  std::array<double, 6> out{};
  std::uint64_t n = i + 1;  // skip the origin
  for (int d = 0; d < dim_; ++d) {
    std::uint32_t x = shift_[d];
    std::uint64_t g = n ^ (n >> 1);  // Gray code
    for (int b = 0; b < 32 && g; ++b, g >>= 1)
      if (g & 1ULL) x ^= dirs_[d][b];
    out[static_cast<std::size_t>(d)] = (static_cast<double>(x) + 0.5) / 4294967296.0;
  }
  return out;
}

}  // namespace junction
