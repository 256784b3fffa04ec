#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onlineboot/engine.hpp"
#include "onlineboot/generators.hpp"

namespace onlineboot {

struct ExperimentConfig {
  Scenario scenario = make_scenario(ScenarioTag::ma0);
  std::vector<Method> methods{Method::ar};
  std::vector<std::size_t> checkpoints{5000};
  std::size_t chains = 250;
  std::size_t reps = 250;
  double beta = kBetaOpt;
  double level = 0.9;
  std::uint64_t master_seed = 0;
  /// Measure per-update wall time. Off by default: timing makes output
  /// files differ between otherwise identical runs.
  bool record_timing = false;
  /// BLOCK history cap in observations; 0 means the largest checkpoint.
  std::size_t block_history_cap = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// The resolved configuration in config-file syntax. Loading it back
  /// reproduces this configuration.
  std::string describe() const;

  std::uint64_t hash() const;
};

struct RunResult {
  Method method = Method::ar;
  ScenarioTag scenario = ScenarioTag::ma0;
  std::size_t n = 0;
  std::size_t rep = 0;
  double var_est = 0.0;
  bool covered = false;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  /// Median per-update wall time since the previous checkpoint, NaN if not measured.
  double elapsed_us = 0.0;
  std::size_t regens = 0;
  std::uint64_t subseed = 0;
  std::uint64_t config_hash = 0;
  std::size_t state_bytes = 0;
  bool failed = false;
};

/// Seed of the bootstrap weights for one replication. Depends only on its
/// arguments, so changing the replication count leaves earlier rows alone.
std::uint64_t replication_seed(std::uint64_t master_seed, Method method, ScenarioTag scenario, std::size_t rep);

/// Seed of the data series for one replication, shared by all methods.
std::uint64_t data_seed(std::uint64_t master_seed, ScenarioTag scenario, std::size_t rep);

/// Streams one series through one ensemble and records a row at every
/// checkpoint. Never throws for engine or generator failures; those rows
/// are marked failed with NaN values.
std::vector<RunResult> run_replication(const ExperimentConfig& config, Method method, std::size_t rep);

/// Runs every (method, rep) pair on `workers` threads (0 = hardware
/// concurrency). Rows are sorted by (method, scenario, n, rep), so the
/// result does not depend on the worker count.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, unsigned workers = 0);

/// Rows matching a method and checkpoint.
std::vector<RunResult> select(std::span<const RunResult> rows, Method method, std::size_t n);

struct CoverageStat {
  double rate = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Fraction of non-failed rows whose interval covered the target.
/// Throws InsufficientDataError when no usable rows remain.
CoverageStat coverage(std::span<const RunResult> rows);

struct MomentStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Mean and sample standard deviation of the finite variance estimates.
MomentStat variance_stats(std::span<const RunResult> rows);

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr std::string_view kCsvHeader =
    "method,scenario,n,rep,var_est,covered,ci_lo,ci_hi,elapsed_us,regens,subseed";

std::string format_csv(std::span<const RunResult> rows);

/// Sidecar metadata: schema version, columns, config echo, hashes and
/// oracle targets. Contains nothing run-dependent besides the CSV hash.
std::string format_metadata(const ExperimentConfig& config, std::string_view csv_bytes,
                            std::span<const RunResult> rows);

struct TimingTrace {
  Method method = Method::ar;
  /// elapsed_us[t-1] is the wall time of update t.
  std::vector<double> elapsed_us;
  std::vector<std::uint64_t> regen_steps;
  double total_seconds = 0.0;
  std::size_t state_bytes_initial = 0;
  std::size_t state_bytes_final = 0;
  /// Largest state_bytes() seen after the first update.
  std::size_t state_bytes_peak = 0;
};

/// Times every update of one ensemble fed an iid N(0,1) stream.
TimingTrace timing_benchmark(Method method, std::size_t stream_length, std::size_t chains, std::uint64_t seed,
                             double beta = kBetaOpt);

/// Median of elapsed_us over updates first_t .. first_t + count - 1.
double median_update_time(const TimingTrace& trace, std::size_t first_t, std::size_t count);

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/**
 * Exact conditional variance Var*(n^-1/2 sum_i V_i X_i) of the AR weights
 * given the data, maintained in O(1) per observation through
 * Cov(V_i, V_j) = prod_{k=i+1..j} rho_k:
 *
 *     A_j  = rho_j (A_{j-1} + X_{j-1})
 *     Var* = (sum X_i^2 + 2 sum_j X_j A_j) / n
 */
class ConditionalVarianceTracker {
 public:
  explicit ConditionalVarianceTracker(double beta);

  void observe(double x);
  double value() const;
  std::uint64_t t() const { return t_; }

 private:
  double beta_;
  std::uint64_t t_ = 0;
  double prev_x_ = 0.0;
  double lagged_ = 0.0;
  double sum_sq_ = 0.0;
  double cross_ = 0.0;
};

struct RateCheckPoint {
  double beta = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

struct RateCheckSlope {
  double beta = 0.0;
  double bias2_slope = 0.0;
  double variance_slope = 0.0;
  /// -2 beta / (1 + beta)
  double bias2_target = 0.0;
  /// beta - 1
  double variance_target = 0.0;
};

struct RateCheckResult {
  std::vector<RateCheckPoint> points;
  std::vector<RateCheckSlope> slopes;
  /// Grid beta with the smallest empirical MSE at the largest n.
  double mse_minimizer = 0.0;
};

/**
 * Monte Carlo check of the bias and variance rates of the AR variance
 * estimator. Each replication streams one centred series and evaluates the
 * exact conditional variance at every n in `n_grid` for every beta.
 * Requires n_grid to span at least 1.5 decades and a plain-mean scenario.
 */
RateCheckResult rate_check(std::span<const double> beta_grid, std::span<const std::size_t> n_grid,
                           const Scenario& scenario, std::size_t reps, std::uint64_t seed);

}  // namespace onlineboot
