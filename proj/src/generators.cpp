#include "onlineboot/generators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace onlineboot {

MaParams MaParams::geometric(std::size_t q, double mu) {
  MaParams p;
  p.mu = mu;
  p.thetas.resize(q);
  for (std::size_t j = 0; j < q; ++j) p.thetas[j] = std::ldexp(1.0, -static_cast<int>(j + 1));
  return p;
}

void GarchParams::validate() const {
  if (!(alpha0 > 0.0)) throw std::invalid_argument("garch: alpha0 must be positive");
  if (!(alpha1 >= 0.0) || !(beta1 >= 0.0)) throw std::invalid_argument("garch: alpha1 and beta1 must be >= 0");
  if (!(alpha1 + beta1 < 1.0)) throw std::invalid_argument("garch: alpha1 + beta1 must be < 1 for stationarity");
}

double GarchParams::unconditional_variance() const { return alpha0 / (1.0 - alpha1 - beta1); }

double ma_next(MaState& state, double eps, const MaParams& params) {
  const std::size_t q = params.order();
  double x = params.mu + eps;
  // past[(head + j) % q] holds eps_{i-1-j}.
  for (std::size_t j = 0; j < q; ++j) x += params.thetas[j] * state.past[(state.head + j) % q];
  if (q > 0) {
    state.head = (state.head + q - 1) % q;
    state.past[state.head] = eps;
  }
  return x;
}

GarchState GarchState::stationary(const GarchParams& params) {
  const double s2 = params.unconditional_variance();
  return {0.0, 0.0, s2, s2};
}

double garch_next(GarchState& state, double xi, const GarchParams& params) {
  const double sigma2 = params.alpha0 + params.alpha1 * state.gamma1_sq + params.beta1 * state.sigma2;
  const double gamma = std::sqrt(sigma2) * xi;
  const double z = params.mu + gamma + params.theta1 * state.gamma1 + params.theta2 * state.gamma2;
  state.gamma2 = state.gamma1;
  state.gamma1 = gamma;
  state.gamma1_sq = gamma * gamma;
  state.sigma2 = sigma2;
  return z;
}

std::string_view scenario_name(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::ma0:
      return "ma0";
    case ScenarioTag::ma2:
      return "ma2";
    case ScenarioTag::ma20:
      return "ma20";
    case ScenarioTag::logmeanexp:
      return "logmeanexp";
    case ScenarioTag::ma2garch:
      return "ma2garch";
  }
  return "?";
}

ScenarioTag parse_scenario(std::string_view name) {
  for (auto tag : {ScenarioTag::ma0, ScenarioTag::ma2, ScenarioTag::ma20, ScenarioTag::logmeanexp,
                   ScenarioTag::ma2garch}) {
    if (scenario_name(tag) == name) return tag;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) +
                              "' (expected ma0, ma2, ma20, logmeanexp or ma2garch)");
}

Scenario make_scenario(ScenarioTag tag) {
  Scenario s;
  s.tag = tag;
  std::size_t q = 0;
  switch (tag) {
    case ScenarioTag::ma0:
      q = 0;
      break;
    case ScenarioTag::ma2:
    case ScenarioTag::logmeanexp:
    case ScenarioTag::ma2garch:
      q = 2;
      break;
    case ScenarioTag::ma20:
      q = 20;
      break;
  }
  s.ma = MaParams::geometric(q);
  s.burn_in = std::max<std::size_t>(10 * q, 500);
  return s;
}

ScenarioStream::ScenarioStream(const Scenario& scenario, std::uint64_t seed)
    : scenario_(scenario),
      rng_(seed, fnv1a64(scenario_name(scenario.tag))),
      ma_(scenario.ma.order()),
      garch_(GarchState::stationary(scenario.garch)) {
  if (scenario_.tag == ScenarioTag::ma2garch) scenario_.garch.validate();
  for (std::size_t i = 0; i < scenario_.burn_in; ++i) raw_next();
}

double ScenarioStream::raw_next() {
  if (scenario_.tag == ScenarioTag::ma2garch) return garch_next(garch_, rng_.normal(), scenario_.garch);
  return ma_next(ma_, rng_.normal(), scenario_.ma);
}

double ScenarioStream::next() {
  const double x = raw_next();
  return scenario_.log_mean_exp() ? std::exp(x) : x;
}

double ma_autocovariance(const MaParams& params, std::size_t h) {
  const std::size_t q = params.order();
  if (h > q) return 0.0;
  auto theta = [&](std::size_t j) { return j == 0 ? 1.0 : params.thetas[j - 1]; };
  double acc = 0.0;
  for (std::size_t j = 0; j + h <= q; ++j) acc += theta(j) * theta(j + h);
  return acc;
}

double sigma_inf_ma(const MaParams& params) {
  double s = 1.0;
  for (double th : params.thetas) s += th;
  return s * s;
}

double sigma_inf(const Scenario& scenario) {
  switch (scenario.tag) {
    case ScenarioTag::ma0:
    case ScenarioTag::ma2:
    case ScenarioTag::ma20:
      return sigma_inf_ma(scenario.ma);
    case ScenarioTag::logmeanexp: {
      // Var(ln Ybar) ~ sum_h Cov(Y_0, Y_h) / E[Y]^2, Cov/E^2 = exp(C(h)) - 1.
      double acc = std::expm1(ma_autocovariance(scenario.ma, 0));
      for (std::size_t h = 1; h <= scenario.ma.order(); ++h) acc += 2.0 * std::expm1(ma_autocovariance(scenario.ma, h));
      return acc;
    }
    case ScenarioTag::ma2garch: {
      const auto& g = scenario.garch;
      const double s = 1.0 + g.theta1 + g.theta2;
      return s * s * g.unconditional_variance();
    }
  }
  throw std::logic_error("unhandled scenario");
}

MonteCarloEstimate sigma_inf_mc(const Scenario& scenario, std::size_t series_length, std::size_t replications,
                                std::uint64_t seed) {
  if (series_length < 1 || replications < 2) throw std::invalid_argument("sigma_inf_mc: need n >= 1 and >= 2 replications");
  std::vector<double> scaled(replications);
  const double root_n = std::sqrt(static_cast<double>(series_length));
  for (std::size_t r = 0; r < replications; ++r) {
    ScenarioStream stream(scenario, derive_seed({seed, r}));
    double mean = 0.0;
    for (std::size_t i = 1; i <= series_length; ++i) mean += (stream.next() - mean) / static_cast<double>(i);
    scaled[r] = root_n * (scenario.log_mean_exp() ? std::log(mean) : mean);
  }
  double mean = 0.0;
  for (double s : scaled) mean += s;
  mean /= static_cast<double>(replications);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double s : scaled) {
    const double d2 = (s - mean) * (s - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double rd = static_cast<double>(replications);
  const double var = m2 / (rd - 1.0);
  const double mu4 = m4 / rd;
  const double mu2 = m2 / rd;
  return {var, std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / rd)};
}

double true_mean(const Scenario& scenario) {
  switch (scenario.tag) {
    case ScenarioTag::logmeanexp:
      return scenario.ma.mu + ma_autocovariance(scenario.ma, 0) / 2.0;
    case ScenarioTag::ma2garch:
      return scenario.garch.mu;
    default:
      return scenario.ma.mu;
  }
}

}  // namespace onlineboot
