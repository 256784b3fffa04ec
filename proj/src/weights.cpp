#include "onlineboot/weights.hpp"

#include <stdexcept>
#include <string>

namespace onlineboot {

void validate_beta(double beta) {
  if (!(beta > 0.0 && beta < 0.5)) {
    throw std::domain_error("beta must lie in the open interval (0, 0.5), got " + std::to_string(beta));
  }
}

double rho(std::uint64_t t, double beta) {
  if (t < 1) throw std::domain_error("rho: step index must be >= 1");
  validate_beta(beta);
  return 1.0 - std::pow(static_cast<double>(t), -beta);
}

ArWeightState ar_next(ArWeightState state, double zeta, double beta) {
  const double r = rho(state.t + 1, beta);
  return {state.t + 1, ar_step(state.v, r, std::sqrt(1.0 - r * r), zeta)};
}

double ar_weight_cov(std::uint64_t i, std::uint64_t h, double beta) {
  if (i < 1) throw std::domain_error("ar_weight_cov: step index must be >= 1");
  validate_beta(beta);
  double out = 1.0;
  for (std::uint64_t k = 1; k <= h; ++k) out *= 1.0 - std::pow(static_cast<double>(i + k), -beta);
  return out;
}

std::size_t block_size(std::uint64_t n) {
  if (n < 8) return 1;
  auto m = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(n)));
  // cbrt may be off by one near perfect cubes; settle with integer checks.
  while (m * m * m > n) --m;
  while ((m + 1) * (m + 1) * (m + 1) <= n) ++m;
  return static_cast<std::size_t>(m);
}

double block_shape(std::size_t m) {
  if (m == 0) throw std::invalid_argument("block_shape: block size must be >= 1");
  const double md = static_cast<double>(m);
  return 2.0 / (3.0 * md) + 1.0 / (3.0 * md * md);
}

double block_kernel(std::ptrdiff_t j, std::size_t m) {
  const double aj = static_cast<double>(j < 0 ? -j : j);
  const double md = static_cast<double>(m);
  if (aj > md) return 0.0;
  return (1.0 - aj / md) / md;
}

std::vector<double> block_kernel_table(std::size_t m) {
  std::vector<double> table(2 * m + 1);
  const auto mi = static_cast<std::ptrdiff_t>(m);
  for (std::ptrdiff_t j = -mi; j <= mi; ++j) table[static_cast<std::size_t>(j + mi)] = block_kernel(j, m);
  return table;
}

BlockWeightVector block_regenerate(std::size_t n, std::size_t m, std::span<const double> innovations) {
  if (!(block_shape(m) > 0.0)) throw std::invalid_argument("block_regenerate: invalid gamma shape");
  if (innovations.size() != n + 2 * m) {
    throw std::invalid_argument("block_regenerate: expected n + 2m innovations, got " +
                                std::to_string(innovations.size()));
  }
  const std::vector<double> kernel = block_kernel_table(m);
  BlockWeightVector out{n, std::vector<double>(n), m};
  // innovations[k] holds zeta_{k+1-m}; V_i sums zeta_{i-m..i+m}, i.e.
  // innovations[i-1 .. i-1+2m]. The kernel is symmetric.
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * innovations[i + k];
    out.weights[i] = acc;
  }
  return out;
}

BlockWeightVector block_regenerate(std::size_t n, std::size_t m, RandomStream& rng) {
  const double q = block_shape(m);
  std::vector<double> innovations(n + 2 * m);
  for (auto& z : innovations) z = rng.gamma(q, q);
  return block_regenerate(n, m, innovations);
}

}  // namespace onlineboot
