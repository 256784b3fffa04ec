#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "onlineboot/random.hpp"

namespace onlineboot {

/// Variance-optimal decay exponent for the autoregressive weights, sqrt(2) - 1.
inline const double kBetaOpt = std::sqrt(2.0) - 1.0;

/// Throws std::domain_error unless 0 < beta < 1/2 (open interval, no clamping).
void validate_beta(double beta);

struct ArParams {
  double beta = kBetaOpt;

  void validate() const { validate_beta(beta); }
};

/// Autoregression coefficient at step t: 1 - t^(-beta).
double rho(std::uint64_t t, double beta);

/// State of one autoregressive weight process. Starts at (t = 0, v = 0).
struct ArWeightState {
  std::uint64_t t = 0;
  double v = 0.0;

  bool operator==(const ArWeightState&) const = default;
};

/// Advances the weight process by one step using the innovation `zeta`:
/// v <- 1 + rho_{t+1} (v - 1) + sqrt(1 - rho_{t+1}^2) zeta.
ArWeightState ar_next(ArWeightState state, double zeta, double beta);

/// Same recursion with the step coefficients precomputed; used by the
/// ensemble, which shares rho_t across all chains.
inline double ar_step(double v, double rho_t, double innovation_scale, double zeta) {
  return 1.0 + rho_t * (v - 1.0) + innovation_scale * zeta;
}

/// Closed-form Cov(V_i, V_{i+h}) = prod_{k=1..h} (1 - (i+k)^(-beta)).
double ar_weight_cov(std::uint64_t i, std::uint64_t h, double beta);

/// Independent N(1, 1) weight.
inline double iid_next(double zeta) { return 1.0 + zeta; }

/// Block size floor(n^(1/3)), at least 1. Exact for all 64-bit n.
std::size_t block_size(std::uint64_t n);

/// Gamma shape (and rate) of the block innovations: 2/(3m) + 1/(3m^2).
double block_shape(std::size_t m);

/// Triangular kernel b_j = (1 - |j|/m) / m for |j| <= m, else 0.
double block_kernel(std::ptrdiff_t j, std::size_t m);

/// The 2m+1 kernel coefficients b_{-m}, ..., b_m.
std::vector<double> block_kernel_table(std::size_t m);

struct BlockWeightVector {
  std::size_t n = 0;
  std::vector<double> weights;
  std::size_t m_used = 0;
};

/**
 * Computes block multiplier weights V_i = sum_{|j|<=m} b_j zeta_{i-j}
 * for i = 1..n.
 *
 * `innovations` holds zeta_{1-m}, ..., zeta_{n+m} (n + 2m values). The cost
 * is O(n m); nothing is reused from earlier calls.
 */
BlockWeightVector block_regenerate(std::size_t n, std::size_t m, std::span<const double> innovations);

/// Draws n + 2m fresh Gamma(q(m), q(m)) innovations from `rng` and
/// builds the weight vector from them.
BlockWeightVector block_regenerate(std::size_t n, std::size_t m, RandomStream& rng);

}  // namespace onlineboot
