#include "onlineboot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>
#include <tuple>

namespace onlineboot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

RunResult failed_row(const ExperimentConfig& config, Method method, std::size_t n, std::size_t rep,
                     std::uint64_t subseed) {
  RunResult r;
  r.method = method;
  r.scenario = config.scenario.tag;
  r.n = n;
  r.rep = rep;
  r.var_est = kNaN;
  r.ci_lo = kNaN;
  r.ci_hi = kNaN;
  r.elapsed_us = kNaN;
  r.subseed = subseed;
  r.config_hash = config.hash();
  r.failed = true;
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("methods: at least one method is required");
  if (checkpoints.empty()) throw std::invalid_argument("n: at least one checkpoint is required");
  if (checkpoints.front() < 1) throw std::invalid_argument("n: checkpoints must be >= 1");
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1]) throw std::invalid_argument("n: checkpoints must be strictly increasing");
  }
  if (chains < 2) throw std::invalid_argument("chains: need at least 2 bootstrap chains");
  if (reps < 1) throw std::invalid_argument("reps: need at least 1 replication");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level: must lie in (0, 1)");
  try {
    validate_beta(beta);
  } catch (const std::domain_error& e) {
    throw std::invalid_argument(std::string("beta: ") + e.what());
  }
  if (scenario.tag == ScenarioTag::ma2garch) scenario.garch.validate();
  if (block_history_cap != 0 && block_history_cap < checkpoints.back()) {
    throw std::invalid_argument("block_cap: smaller than the largest checkpoint");
  }
}

std::string ExperimentConfig::describe() const {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "methods = " << join(methods, [](Method m) { return std::string(method_name(m)); }) << '\n';
  out << "n = " << join(checkpoints, [](std::size_t n) { return std::to_string(n); }) << '\n';
  out << "chains = " << chains << '\n';
  out << "reps = " << reps << '\n';
  out << "beta = " << num(beta) << '\n';
  out << "level = " << num(level) << '\n';
  out << "seed = " << master_seed << '\n';
  out << "timing = " << (record_timing ? "true" : "false") << '\n';
  out << "block_cap = " << block_history_cap << '\n';
  out << "\n[scenario]\n";
  out << "tag = " << scenario_name(scenario.tag) << '\n';
  out << "mu = " << num(scenario.ma.mu) << '\n';
  out << "thetas = " << join(scenario.ma.thetas, num) << '\n';
  out << "burn_in = " << scenario.burn_in << '\n';
  out << "\n[garch]\n";
  out << "theta1 = " << num(scenario.garch.theta1) << '\n';
  out << "theta2 = " << num(scenario.garch.theta2) << '\n';
  out << "alpha0 = " << num(scenario.garch.alpha0) << '\n';
  out << "alpha1 = " << num(scenario.garch.alpha1) << '\n';
  out << "beta1 = " << num(scenario.garch.beta1) << '\n';
  out << "mu = " << num(scenario.garch.mu) << '\n';
  return out.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(describe()); }

std::uint64_t replication_seed(std::uint64_t master_seed, Method method, ScenarioTag scenario, std::size_t rep) {
  return derive_seed({master_seed, fnv1a64(method_name(method)), fnv1a64(scenario_name(scenario)), rep});
}

std::uint64_t data_seed(std::uint64_t master_seed, ScenarioTag scenario, std::size_t rep) {
  return derive_seed({master_seed, fnv1a64("data"), fnv1a64(scenario_name(scenario)), rep});
}

std::vector<RunResult> run_replication(const ExperimentConfig& config, Method method, std::size_t rep) {
  const std::uint64_t subseed = replication_seed(config.master_seed, method, config.scenario.tag, rep);
  const std::uint64_t config_hash = config.hash();
  std::vector<RunResult> rows;
  rows.reserve(config.checkpoints.size());

  try {
    EnsembleConfig ec;
    ec.method = method;
    ec.chains = config.chains;
    ec.dim = 1;
    ec.beta = config.beta;
    ec.seed = subseed;
    ec.max_history = config.block_history_cap ? config.block_history_cap : config.checkpoints.back();
    Ensemble ensemble(ec);
    ScenarioStream data(config.scenario, data_seed(config.master_seed, config.scenario.tag, rep));

    Transform transform;
    if (config.scenario.log_mean_exp()) transform = [](std::span<const double> x) { return std::log(x[0]); };
    const double target = true_mean(config.scenario);

    std::vector<double> durations;
    std::size_t next = 0;
    for (std::size_t t = 1; next < config.checkpoints.size(); ++t) {
      const double x = data.next();
      if (config.record_timing) {
        const auto start = std::chrono::steady_clock::now();
        ensemble.observe(x);
        const auto stop = std::chrono::steady_clock::now();
        durations.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
      } else {
        ensemble.observe(x);
      }
      if (t != config.checkpoints[next]) continue;

      const UncertaintySummary s = confidence_interval(ensemble, config.level, transform);
      RunResult r;
      r.method = method;
      r.scenario = config.scenario.tag;
      r.n = t;
      r.rep = rep;
      r.var_est = s.variance_est[0];
      r.ci_lo = s.ci_lower[0];
      r.ci_hi = s.ci_upper[0];
      r.covered = r.ci_lo <= target && target <= r.ci_hi;
      r.elapsed_us = config.record_timing ? median(durations) : kNaN;
      r.regens = ensemble.regenerations();
      r.subseed = subseed;
      r.config_hash = config_hash;
      r.state_bytes = ensemble.state_bytes();
      rows.push_back(r);
      durations.clear();
      ++next;
    }
  } catch (const std::exception&) {
    for (std::size_t i = rows.size(); i < config.checkpoints.size(); ++i) {
      rows.push_back(failed_row(config, method, config.checkpoints[i], rep, subseed));
    }
  }
  return rows;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  struct Job {
    Method method;
    std::size_t rep;
  };
  std::vector<Job> jobs;
  for (Method m : config.methods) {
    for (std::size_t r = 0; r < config.reps; ++r) jobs.push_back({m, r});
  }
  std::vector<std::vector<RunResult>> slots(jobs.size());
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (std::size_t j; (j = cursor.fetch_add(1)) < jobs.size();) {
      slots[j] = run_replication(config, jobs[j].method, jobs[j].rep);
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<RunResult> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  std::sort(rows.begin(), rows.end(), [](const RunResult& a, const RunResult& b) {
    return std::tie(a.method, a.scenario, a.n, a.rep) < std::tie(b.method, b.scenario, b.n, b.rep);
  });
  return rows;
}

std::vector<RunResult> select(std::span<const RunResult> rows, Method method, std::size_t n) {
  std::vector<RunResult> out;
  for (const auto& r : rows) {
    if (r.method == method && r.n == n) out.push_back(r);
  }
  return out;
}

CoverageStat coverage(std::span<const RunResult> rows) {
  CoverageStat out;
  std::size_t hits = 0;
  for (const auto& r : rows) {
    if (r.failed) continue;
    ++out.count;
    hits += r.covered ? 1 : 0;
  }
  if (out.count == 0) throw InsufficientDataError("coverage: no usable rows");
  const double n = static_cast<double>(out.count);
  out.rate = static_cast<double>(hits) / n;
  out.standard_error = std::sqrt(out.rate * (1.0 - out.rate) / n);
  return out;
}

MomentStat variance_stats(std::span<const RunResult> rows) {
  MomentStat out;
  double mean = 0.0;
  double m2 = 0.0;
  for (const auto& r : rows) {
    if (r.failed || !std::isfinite(r.var_est)) continue;
    ++out.count;
    const double d = r.var_est - mean;
    mean += d / static_cast<double>(out.count);
    m2 += d * (r.var_est - mean);
  }
  if (out.count == 0) throw InsufficientDataError("variance_stats: no usable rows");
  out.mean = mean;
  out.std = out.count > 1 ? std::sqrt(m2 / static_cast<double>(out.count - 1)) : 0.0;
  return out;
}

std::string format_csv(std::span<const RunResult> rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += method_name(r.method);
    out += ',';
    out += scenario_name(r.scenario);
    out += ',' + std::to_string(r.n) + ',' + std::to_string(r.rep) + ',' + num(r.var_est) + ',';
    out += r.failed ? "nan" : (r.covered ? "1" : "0");
    out += ',' + num(r.ci_lo) + ',' + num(r.ci_hi) + ',' + num(r.elapsed_us) + ',' + std::to_string(r.regens) + ',' +
           std::to_string(r.subseed) + '\n';
  }
  return out;
}

std::string format_metadata(const ExperimentConfig& config, std::string_view csv_bytes,
                            std::span<const RunResult> rows) {
  std::ostringstream out;
  char hex[24];
  out << "[output]\n";
  out << "schema_version = " << kCsvSchemaVersion << '\n';
  out << "columns = " << kCsvHeader << '\n';
  out << "rows = " << rows.size() << '\n';
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.failed ? 1 : 0;
  out << "failed_rows = " << failed << '\n';
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config.hash()));
  out << "config_hash = " << hex << '\n';
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(csv_bytes)));
  out << "content_hash = " << hex << '\n';
  out << "\n[oracle]\n";
  out << "true_mean = " << num(true_mean(config.scenario)) << '\n';
  out << "sigma_inf = " << num(sigma_inf(config.scenario)) << '\n';
  out << "\n[state]\n";
  for (Method m : config.methods) {
    std::size_t peak = 0;
    for (const auto& r : rows) {
      if (r.method == m) peak = std::max(peak, r.state_bytes);
    }
    out << "peak_state_bytes." << method_name(m) << " = " << peak << '\n';
  }
  out << '\n' << config.describe();
  return out.str();
}

TimingTrace timing_benchmark(Method method, std::size_t stream_length, std::size_t chains, std::uint64_t seed,
                             double beta) {
  EnsembleConfig ec;
  ec.method = method;
  ec.chains = chains;
  ec.beta = beta;
  ec.seed = derive_seed({seed, fnv1a64("bench"), fnv1a64(method_name(method))});
  Ensemble ensemble(ec);
  ScenarioStream data(make_scenario(ScenarioTag::ma0), derive_seed({seed, fnv1a64("bench-data")}));

  TimingTrace trace;
  trace.method = method;
  trace.elapsed_us.reserve(stream_length);
  trace.state_bytes_initial = ensemble.state_bytes();
  const auto begin = std::chrono::steady_clock::now();
  for (std::size_t t = 1; t <= stream_length; ++t) {
    const double x = data.next();
    const auto start = std::chrono::steady_clock::now();
    ensemble.observe(x);
    const auto stop = std::chrono::steady_clock::now();
    trace.elapsed_us.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
    if (ensemble.last_step_regenerated()) trace.regen_steps.push_back(t);
    trace.state_bytes_peak = std::max(trace.state_bytes_peak, ensemble.state_bytes());
  }
  trace.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  trace.state_bytes_final = ensemble.state_bytes();
  return trace;
}

double median_update_time(const TimingTrace& trace, std::size_t first_t, std::size_t count) {
  if (first_t < 1 || first_t - 1 + count > trace.elapsed_us.size()) {
    throw std::out_of_range("median_update_time: window outside the trace");
  }
  const auto begin = trace.elapsed_us.begin() + static_cast<std::ptrdiff_t>(first_t - 1);
  return median(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count)));
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope: need >= 2 paired points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

ConditionalVarianceTracker::ConditionalVarianceTracker(double beta) : beta_(beta) { validate_beta(beta); }

void ConditionalVarianceTracker::observe(double x) {
  ++t_;
  if (t_ > 1) {
    lagged_ = (1.0 - std::pow(static_cast<double>(t_), -beta_)) * (lagged_ + prev_x_);
    cross_ += x * lagged_;
  }
  sum_sq_ += x * x;
  prev_x_ = x;
}

double ConditionalVarianceTracker::value() const {
  if (t_ == 0) return kNaN;
  return (sum_sq_ + 2.0 * cross_) / static_cast<double>(t_);
}

RateCheckResult rate_check(std::span<const double> beta_grid, std::span<const std::size_t> n_grid,
                           const Scenario& scenario, std::size_t reps, std::uint64_t seed) {
  if (beta_grid.empty()) throw std::invalid_argument("rate_check: empty beta grid");
  if (n_grid.size() < 2) throw std::invalid_argument("rate_check: insufficient n grid (need >= 2 points)");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("rate_check: n grid must be strictly increasing");
  }
  if (std::log10(static_cast<double>(n_grid.back()) / static_cast<double>(n_grid.front())) < 1.5) {
    throw std::invalid_argument("rate_check: insufficient n grid (must span >= 1.5 decades)");
  }
  if (reps < 2) throw std::invalid_argument("rate_check: need >= 2 replications");
  if (scenario.log_mean_exp()) throw std::invalid_argument("rate_check: scenario statistic must be a plain mean");
  for (double b : beta_grid) validate_beta(b);

  const double target = sigma_inf(scenario);
  const double location = true_mean(scenario);
  const std::size_t nb = beta_grid.size();
  const std::size_t nn = n_grid.size();
  // Welford accumulators per (beta, n).
  std::vector<double> mean(nb * nn, 0.0);
  std::vector<double> m2(nb * nn, 0.0);

  for (std::size_t r = 0; r < reps; ++r) {
    ScenarioStream data(scenario, derive_seed({seed, fnv1a64("rate"), r}));
    std::vector<ConditionalVarianceTracker> trackers;
    for (double b : beta_grid) trackers.emplace_back(b);
    std::size_t next = 0;
    for (std::size_t t = 1; next < nn; ++t) {
      const double x = data.next() - location;
      for (auto& tr : trackers) tr.observe(x);
      if (t != n_grid[next]) continue;
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t k = b * nn + next;
        const double v = trackers[b].value();
        const double d = v - mean[k];
        mean[k] += d / static_cast<double>(r + 1);
        m2[k] += d * (v - mean[k]);
      }
      ++next;
    }
  }

  RateCheckResult out;
  std::vector<double> log_n(nn);
  for (std::size_t i = 0; i < nn; ++i) log_n[i] = std::log(static_cast<double>(n_grid[i]));
  double best_mse = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> log_bias2(nn);
    std::vector<double> log_var(nn);
    for (std::size_t i = 0; i < nn; ++i) {
      const std::size_t k = b * nn + i;
      RateCheckPoint p;
      p.beta = beta_grid[b];
      p.n = n_grid[i];
      p.mean = mean[k];
      p.bias2 = (mean[k] - target) * (mean[k] - target);
      p.variance = m2[k] / static_cast<double>(reps - 1);
      p.mse = p.bias2 + p.variance;
      log_bias2[i] = std::log(p.bias2);
      log_var[i] = std::log(p.variance);
      out.points.push_back(p);
      if (i + 1 == nn && p.mse < best_mse) {
        best_mse = p.mse;
        out.mse_minimizer = p.beta;
      }
    }
    const double beta = beta_grid[b];
    out.slopes.push_back({beta, ols_slope(log_n, log_bias2), ols_slope(log_n, log_var), -2.0 * beta / (1.0 + beta),
                          beta - 1.0});
  }
  return out;
}

}  // namespace onlineboot
