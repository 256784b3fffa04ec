#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "onlineboot/random.hpp"

namespace onlineboot {

/// MA(q): X_i = mu + eps_i + sum_j theta_j eps_{i-j}.
struct MaParams {
  std::vector<double> thetas;
  double mu = 0.0;

  std::size_t order() const { return thetas.size(); }

  /// theta_j = 2^(-j), j = 1..q.
  static MaParams geometric(std::size_t q, double mu = 0.0);
};

/// MA(2) over GARCH(1,1) innovations gamma_i = sigma_i xi_i with
/// sigma_i^2 = alpha0 + alpha1 gamma_{i-1}^2 + beta1 sigma_{i-1}^2.
struct GarchParams {
  double theta1 = 0.5;
  double theta2 = 0.25;
  double alpha0 = 0.2;
  double alpha1 = 0.1;
  double beta1 = 0.6;
  double mu = 0.0;

  /// Throws std::invalid_argument unless alpha0 > 0, alpha1, beta1 >= 0
  /// and alpha1 + beta1 < 1.
  void validate() const;

  /// alpha0 / (1 - alpha1 - beta1).
  double unconditional_variance() const;
};

/// Innovation history for ma_next: eps_{i-1}, ..., eps_{i-q}, newest first.
struct MaState {
  std::vector<double> past;
  std::size_t head = 0;

  explicit MaState(std::size_t q = 0) : past(q, 0.0) {}
};

/// Returns mu + eps + sum_j theta_j eps_{i-j} and pushes eps into the buffer.
double ma_next(MaState& state, double eps, const MaParams& params);

struct GarchState {
  double gamma1 = 0.0;  // gamma_{i-1}
  double gamma2 = 0.0;  // gamma_{i-2}
  double gamma1_sq = 0.0;
  double sigma2 = 0.0;

  /// Starts the volatility recursion at the unconditional variance.
  static GarchState stationary(const GarchParams& params);
};

/// One MA(2)-GARCH(1,1) step driven by the standard normal `xi`.
double garch_next(GarchState& state, double xi, const GarchParams& params);

enum class ScenarioTag { ma0, ma2, ma20, logmeanexp, ma2garch };

std::string_view scenario_name(ScenarioTag tag);
ScenarioTag parse_scenario(std::string_view name);

struct Scenario {
  ScenarioTag tag = ScenarioTag::ma0;
  /// Used by the MA and LogMeanExp scenarios.
  MaParams ma;
  /// Used by the MA(2)-GARCH scenario.
  GarchParams garch;
  /// Draws discarded before the first emitted value.
  std::size_t burn_in = 500;

  /// LogMeanExp streams exp(X_i); the statistic is ln of the running mean.
  bool log_mean_exp() const { return tag == ScenarioTag::logmeanexp; }
};

/// Scenario with the default parameters: theta_j = 2^(-j), mu = 0,
/// burn-in max(10q, 500), GARCH (0.5, 0.25, 0.2, 0.1, 0.6).
Scenario make_scenario(ScenarioTag tag);

/// Sequential stream of one scenario; a pure function of (scenario, seed).
class ScenarioStream {
 public:
  ScenarioStream(const Scenario& scenario, std::uint64_t seed);

  double next();

 private:
  double raw_next();

  Scenario scenario_;
  RandomStream rng_;
  MaState ma_;
  GarchState garch_;
};

/// Lag-h autocovariance of an MA(q) with unit noise: sum_j theta_j theta_{j+h}, theta_0 = 1.
double ma_autocovariance(const MaParams& params, std::size_t h);

/// Long-run variance (1 + sum_j theta_j)^2.
double sigma_inf_ma(const MaParams& params);

/// Long-run variance of the scenario statistic in closed form. For
/// LogMeanExp this is the delta-method value sum_{|h|<=q} (exp(C(h)) - 1);
/// for MA(2)-GARCH it is (1 + theta1 + theta2)^2 alpha0 / (1 - alpha1 - beta1).
double sigma_inf(const Scenario& scenario);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/**
 * Estimates the long-run variance as the across-replication variance of
 * sqrt(n) * statistic, with the statistic the plain mean or, for
 * LogMeanExp, ln of the mean of exp(X). Replications are seeded from
 * (seed, r) and independent of each other.
 */
MonteCarloEstimate sigma_inf_mc(const Scenario& scenario, std::size_t series_length, std::size_t replications,
                                std::uint64_t seed);

/// Population value of the scenario statistic: mu, or mu + Var(X)/2 for LogMeanExp.
double true_mean(const Scenario& scenario);

}  // namespace onlineboot
