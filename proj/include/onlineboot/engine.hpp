#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "onlineboot/random.hpp"
#include "onlineboot/weights.hpp"

namespace onlineboot {

enum class Method { ar, iid, block };

std::string_view method_name(Method method);

/// Parses "ar", "iid" or "block" (case-sensitive). Throws std::invalid_argument.
Method parse_method(std::string_view name);

/// One bootstrap replicate: its weight process, the running mean of its
/// weights and its weighted running average of the data.
struct BootstrapChain {
  ArWeightState weight;
  double vbar = 0.0;
  std::vector<double> xbar_star;
};

/**
 * Folds observation `x` with weight `v` into a chain at step `t` (>= 1).
 *
 * Order matters: the weighted average uses the previous running weight mean
 * and the new weight, then the running weight mean is updated:
 *
 *     xbar* <- ((t-1) vbar xbar* + x v) / ((t-1) vbar + v)
 *     vbar  <- (1 - 1/t) vbar + v / t
 *
 * vbar starts at 0; at t = 1 the (t-1) factor removes it from the
 * denominator. Returns false and sets xbar* to NaN when the denominator is
 * exactly zero.
 */
bool fold_weighted(double& vbar, std::span<double> xbar_star, std::span<const double> x, std::uint64_t t,
                   double v);

/// Advances the AR weight with `zeta`, then folds `x` in. `t` must equal
/// the chain's step + 1.
void chain_update(BootstrapChain& chain, std::span<const double> x, std::uint64_t t, double zeta, double beta);

/// Raised when the BLOCK scheme would retain more observations than allowed.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by summaries with too few usable chains or observations.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnsembleConfig {
  Method method = Method::ar;
  std::size_t chains = 250;
  std::size_t dim = 1;
  double beta = kBetaOpt;
  std::uint64_t seed = 0;
  /// BLOCK only: maximum number of retained observations, 0 for no limit.
  std::size_t max_history = 0;
};

/// Everything an Ensemble holds. Chain b's replicate is
/// xbar_star[b*dim .. (b+1)*dim).
struct EnsembleState {
  EnsembleConfig config;
  std::uint64_t t = 0;
  std::vector<double> xbar;
  std::vector<double> v;
  std::vector<double> vbar;
  std::vector<double> xbar_star;
  std::vector<RandomStream> rngs;

  // BLOCK scheme only.
  std::size_t block_m = 0;
  std::vector<double> history;
  /// Per chain, the 2m+1 innovations zeta_{t-m..t+m}, oldest at ring_head.
  std::vector<double> rings;
  std::size_t ring_head = 0;
  std::size_t regenerations = 0;
  bool last_regenerated = false;
};

/**
 * B bootstrap chains updated online from a shared data stream.
 *
 * AR and IID ensembles keep O(B d) state and do O(B d) work per
 * observation. The BLOCK ensemble retains the full data prefix and
 * recomputes every chain from scratch whenever floor(t^(1/3)) increments.
 */
class Ensemble {
 public:
  explicit Ensemble(const EnsembleConfig& config);
  explicit Ensemble(EnsembleState state);

  /// Feeds one d-dimensional observation. Throws std::invalid_argument on a
  /// dimension mismatch and CapacityError when the BLOCK history is full.
  void observe(std::span<const double> x);
  void observe(double x) { observe(std::span<const double>(&x, 1)); }

  const EnsembleConfig& config() const { return state_.config; }
  Method method() const { return state_.config.method; }
  std::size_t dim() const { return state_.config.dim; }
  std::size_t chain_count() const { return state_.config.chains; }
  std::uint64_t t() const { return state_.t; }

  /// Running mean of the observed data.
  std::span<const double> xbar() const { return state_.xbar; }

  /// Weighted average of chain b.
  std::span<const double> replicate(std::size_t b) const;
  bool replicate_finite(std::size_t b) const;

  BootstrapChain chain(std::size_t b) const;

  std::size_t regenerations() const { return state_.regenerations; }
  bool last_step_regenerated() const { return state_.last_regenerated; }

  /// Bytes held by the ensemble's buffers (capacity, not size).
  std::size_t state_bytes() const;

  const EnsembleState& state() const { return state_; }

 private:
  void observe_online(std::span<const double> x);
  void observe_block(std::span<const double> x);
  void regenerate_block();

  EnsembleState state_;
  std::vector<double> kernel_;
  std::vector<double> scratch_;
};

/// Maps a replicate (or the data mean) to a scalar statistic.
using Transform = std::function<double(std::span<const double>)>;

/// Sample variance of sqrt(t) (xbar*_b - xbar_t) across finite chains,
/// one value per coordinate. Needs t >= 2 and at least 2 finite chains.
std::vector<double> variance_estimate(const Ensemble& ensemble);

/// Variance estimate of sqrt(t) (f(xbar*_b) - f(xbar_t)).
double variance_estimate(const Ensemble& ensemble, const Transform& transform);

/// 1-based order-statistic position p (B + 1), clamped to [1, B].
double quantile_position(std::size_t count, double p);

/// Linear interpolation between adjacent order statistics at
/// quantile_position. `sorted` must be ascending and nonempty.
double interpolated_quantile(std::span<const double> sorted, double p);

/// Per-coordinate quantiles of the finite replicates.
std::map<double, std::vector<double>> quantiles(const Ensemble& ensemble, std::span<const double> probs);

struct UncertaintySummary {
  /// Statistic at the data mean (xbar_t, or f(xbar_t) under a transform).
  std::vector<double> center;
  std::vector<double> variance_est;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  double level = 0.0;
  std::size_t chains_used = 0;
  /// Chains left out because their replicate, or its transform, is not finite.
  std::size_t chains_excluded = 0;
};

/**
 * Percentile interval [Q_{(1-level)/2}, Q_{(1+level)/2}] of the replicates,
 * optionally mapped through `transform` first (delta-method intervals).
 * The variance estimate is included; it is NaN when t < 2.
 */
UncertaintySummary confidence_interval(const Ensemble& ensemble, double level, const Transform& transform = {});

}  // namespace onlineboot
