// onlineboot: command-line entry point.
//
//   onlineboot run     coverage / variance experiments -> CSV + .meta sidecar
//   onlineboot bench   per-update timing trace of one ensemble
//   onlineboot oracle  true mean and long-run variance of a scenario
//   onlineboot stream  online bootstrap over numbers read from stdin
//
// Exit codes: 0 ok, 1 invalid configuration, 2 I/O failure, 3 a replication failed.

#include <signal.h>

#include <cmath>
#include <csignal>
#include <deque>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "onlineboot/config.hpp"
#include "onlineboot/engine.hpp"
#include "onlineboot/generators.hpp"
#include "onlineboot/harness.hpp"
#include "onlineboot/snapshot.hpp"

using namespace onlineboot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitFailedRun = 3;

volatile std::sig_atomic_t g_stop = 0;

extern "C" void on_signal(int) { g_stop = 1; }

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const std::string kBetaHelp =
    "AR weight decay exponent, open interval (0, 0.5); default sqrt(2)-1 = " + num(kBetaOpt);

/// Flags shared by run and oracle that map onto config-file keys.
struct ConfigFlags {
  std::string config_path;
  KeyValues values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void add(CLI::App& cmd, const std::string& flag, const std::string& key, const std::string& help,
           const std::string& default_text) {
    auto& holder = holders.emplace_back();
    auto* opt = cmd.add_option(flag, holder, help);
    if (!default_text.empty()) opt->default_str(default_text);
    bound.emplace_back(opt, key);
  }

  /// Defaults < config file < flags.
  ExperimentConfig resolve() {
    ExperimentConfig config;
    if (!config_path.empty()) values = load_config_file(config_path);
    for (std::size_t i = 0; i < bound.size(); ++i) {
      if (bound[i].first->count() > 0) values[bound[i].second] = holders[i];
    }
    apply_config(config, values);
    return config;
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::deque<std::string> holders;
};

void add_scenario_flags(CLI::App& cmd, ConfigFlags& flags) {
  flags.add(cmd, "--scenario", "scenario.tag", "Scenario: ma0, ma2, ma20, logmeanexp, ma2garch", "ma0");
  flags.add(cmd, "--mu", "scenario.mu", "Location of the MA process", "0");
  flags.add(cmd, "--thetas", "scenario.thetas", "Comma-separated MA coefficients", "2^-j, j=1..q");
  flags.add(cmd, "--burn-in", "scenario.burn_in", "Draws discarded before the stream starts", "max(10q, 500)");
}

int cmd_run(ConfigFlags& flags, const std::string& out_path, unsigned workers) {
  ExperimentConfig config;
  try {
    config = flags.resolve();
    if (!flags.has("experiment.seed")) throw ConfigError("seed: --seed is required (no automatic seeding)");
    config.validate();
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const auto rows = run_experiment(config, workers);
  const std::string csv = format_csv(rows);
  const std::string meta = format_metadata(config, csv, rows);
  {
    std::ofstream out(out_path, std::ios::binary);
    out << csv;
    std::ofstream side(out_path + ".meta", std::ios::binary);
    side << meta;
    if (!out || !side) {
      std::cerr << "error: cannot write '" << out_path << "' or its .meta sidecar\n";
      return kExitIo;
    }
  }

  std::cout << "method,scenario,n,coverage,coverage_se,var_mean,var_std,failed\n";
  std::size_t failed = 0;
  for (Method m : config.methods) {
    for (std::size_t n : config.checkpoints) {
      const auto sel = select(rows, m, n);
      std::size_t f = 0;
      for (const auto& r : sel) f += r.failed ? 1 : 0;
      failed += f;
      std::cout << method_name(m) << ',' << scenario_name(config.scenario.tag) << ',' << n << ',';
      try {
        const auto c = coverage(sel);
        const auto v = variance_stats(sel);
        std::cout << num(c.rate) << ',' << num(c.standard_error) << ',' << num(v.mean) << ',' << num(v.std);
      } catch (const InsufficientDataError&) {
        std::cout << "nan,nan,nan,nan";
      }
      std::cout << ',' << f << '\n';
    }
  }
  if (failed > 0) {
    std::cerr << "error: " << failed << " result rows come from failed replications\n";
    return kExitFailedRun;
  }
  return kExitOk;
}

int cmd_oracle(ConfigFlags& flags, std::optional<std::size_t> mc_n, std::optional<std::size_t> mc_reps) {
  ExperimentConfig config;
  try {
    config = flags.resolve();
    if (config.scenario.tag == ScenarioTag::ma2garch) config.scenario.garch.validate();
    if ((mc_n || mc_reps) && !flags.has("experiment.seed")) {
      throw ConfigError("seed: --seed is required for a Monte Carlo estimate");
    }
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const Scenario& s = config.scenario;
  std::cout << "scenario = " << scenario_name(s.tag) << '\n';
  std::cout << "mean = " << num(true_mean(s)) << '\n';
  std::cout << "sigma_inf = " << num(sigma_inf(s)) << '\n';
  if (mc_n || mc_reps) {
    const std::size_t n = mc_n.value_or(100000);
    const std::size_t reps = mc_reps.value_or(500);
    try {
      const auto est = sigma_inf_mc(s, n, reps, config.master_seed);
      std::cout << "sigma_inf_mc = " << num(est.estimate) << '\n';
      std::cout << "sigma_inf_mc_se = " << num(est.standard_error) << '\n';
      std::cout << "mc_n = " << n << '\n' << "mc_reps = " << reps << '\n';
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  return kExitOk;
}

int cmd_bench(const std::string& method_text, std::size_t length, std::size_t chains, std::uint64_t seed,
              double beta, const std::string& out_path) {
  Method method;
  try {
    method = parse_method(method_text);
    if (method == Method::ar) validate_beta(beta);
    if (length == 0) throw std::invalid_argument("length must be >= 1");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const TimingTrace trace = timing_benchmark(method, length, chains, seed, beta);

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return kExitIo;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "t,elapsed_us,regen\n";
  std::size_t next_regen = 0;
  for (std::size_t t = 1; t <= length; ++t) {
    const bool regen = next_regen < trace.regen_steps.size() && trace.regen_steps[next_regen] == t;
    if (regen) ++next_regen;
    out << t << ',' << num(trace.elapsed_us[t - 1]) << ',' << (regen ? 1 : 0) << '\n';
  }
  if (!out) {
    std::cerr << "error: write failed\n";
    return kExitIo;
  }
  std::cerr << "method=" << method_name(method) << " length=" << length << " chains=" << chains
            << " total_s=" << num(trace.total_seconds) << " regenerations=" << trace.regen_steps.size()
            << " state_bytes_initial=" << trace.state_bytes_initial
            << " state_bytes_final=" << trace.state_bytes_final << '\n';
  return kExitOk;
}

bool parse_record(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::string cleaned = line;
  for (char& c : cleaned) {
    if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
  }
  std::istringstream in(cleaned);
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || !std::isfinite(v)) return false;
    out.push_back(v);
  }
  return !out.empty();
}

void write_stream_header(std::size_t d) {
  std::cout << 't';
  for (const char* prefix : {"mean", "ci_lo", "ci_hi"}) {
    for (std::size_t k = 0; k < d; ++k) {
      std::cout << ',' << prefix;
      if (d > 1) std::cout << '_' << k;
    }
  }
  std::cout << '\n';
}

int cmd_stream(const std::string& method_text, std::size_t chains, std::size_t every, double level, double beta,
               std::uint64_t seed, const std::string& snapshot_path, const std::string& resume_path, bool header) {
  if (every == 0 || !(level > 0.0 && level < 1.0) || chains < 2) {
    std::cerr << "error: need --every >= 1, --chains >= 2 and --level in (0, 1)\n";
    return kExitConfig;
  }
  Method method;
  try {
    method = parse_method(method_text);
    validate_beta(beta);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::optional<Ensemble> ensemble;
  if (!resume_path.empty()) {
    std::ifstream in(resume_path);
    if (!in) {
      std::cerr << "error: cannot read snapshot '" << resume_path << "'\n";
      return kExitIo;
    }
    try {
      ensemble.emplace(load_snapshot(in));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitIo;
    }
  }

  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = 0;  // no SA_RESTART: a blocking read returns so the snapshot gets written
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  bool header_done = !header;
  if (ensemble && !header_done) {
    write_stream_header(ensemble->dim());
    header_done = true;
  }

  std::size_t malformed = 0;
  std::string line;
  std::vector<double> x;
  while (!g_stop && std::getline(std::cin, line)) {
    if (line.find_first_not_of(" \t\r,;") == std::string::npos) continue;
    if (!parse_record(line, x)) {
      ++malformed;
      continue;
    }
    if (!ensemble) {
      EnsembleConfig ec;
      ec.method = method;
      ec.chains = chains;
      ec.dim = x.size();
      ec.beta = beta;
      ec.seed = seed;
      ensemble.emplace(ec);
      if (!header_done) {
        write_stream_header(ec.dim);
        header_done = true;
      }
    }
    if (x.size() != ensemble->dim()) {
      std::cerr << "error: record has " << x.size() << " values, stream dimension is " << ensemble->dim() << '\n';
      return kExitConfig;
    }
    ensemble->observe(x);
    if (ensemble->t() % every != 0) continue;

    std::cout << ensemble->t();
    for (double m : ensemble->xbar()) std::cout << ',' << num(m);
    try {
      const auto s = confidence_interval(*ensemble, level);
      for (double v : s.ci_lower) std::cout << ',' << num(v);
      for (double v : s.ci_upper) std::cout << ',' << num(v);
    } catch (const InsufficientDataError&) {
      for (std::size_t k = 0; k < 2 * ensemble->dim(); ++k) std::cout << ",nan";
    }
    std::cout << '\n';
  }
  if (!header_done) write_stream_header(1);
  std::cout.flush();

  if (malformed > 0) std::cerr << "skipped " << malformed << " malformed line(s)\n";
  if (!snapshot_path.empty() && ensemble) {
    std::ofstream out(snapshot_path, std::ios::binary);
    save_snapshot(*ensemble, out);
    if (!out) {
      std::cerr << "error: cannot write snapshot '" << snapshot_path << "'\n";
      return kExitIo;
    }
  }
  return kExitOk;
}

unsigned default_workers() {
  if (const char* env = std::getenv("ONLINEBOOT_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online autoregressive multiplier bootstrap for streaming averages"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run coverage / variance experiments and write a results CSV");
  ConfigFlags run_flags;
  std::string run_out;
  unsigned workers = default_workers();
  run->add_option("--config", run_flags.config_path, "Config file (key = value sections)");
  add_scenario_flags(*run, run_flags);
  run_flags.add(*run, "--methods", "experiment.methods", "Comma-separated methods: ar, iid, block", "ar");
  run_flags.add(*run, "--n", "experiment.n", "Comma-separated, strictly increasing checkpoints", "5000");
  run_flags.add(*run, "--reps", "experiment.reps", "Replications per method (M)", "250");
  run_flags.add(*run, "--chains", "experiment.chains", "Bootstrap chains per ensemble (B)", "250");
  run_flags.add(*run, "--beta", "experiment.beta", kBetaHelp, num(kBetaOpt));
  run_flags.add(*run, "--level", "experiment.level", "Nominal confidence level", "0.9");
  run_flags.add(*run, "--seed", "experiment.seed", "Master seed (required)", "");
  run_flags.add(*run, "--timing", "experiment.timing", "Record per-update wall time (true/false)", "false");
  run_flags.add(*run, "--block-cap", "experiment.block_cap", "BLOCK history cap in observations, 0 = largest n",
                "0");
  run->add_option("--out", run_out, "Output CSV path; metadata goes to <out>.meta")->required();
  run->add_option("--workers", workers, "Worker threads, 0 = all cores (env ONLINEBOOT_WORKERS)")
      ->default_str("0");

  // bench
  auto* bench = app.add_subcommand("bench", "Time every update of one ensemble");
  std::string bench_method = "ar";
  std::size_t bench_length = 100000;
  std::size_t bench_chains = 250;
  std::uint64_t bench_seed = 0;
  double bench_beta = kBetaOpt;
  std::string bench_out;
  bench->add_option("--method", bench_method, "ar, iid or block")->capture_default_str();
  bench->add_option("--length", bench_length, "Stream length")->capture_default_str();
  bench->add_option("--chains", bench_chains, "Bootstrap chains (B)")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Seed")->capture_default_str();
  bench->add_option("--beta", bench_beta, kBetaHelp)->default_str(num(kBetaOpt));
  bench->add_option("--out", bench_out, "Output CSV (t,elapsed_us,regen); stdout if absent");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Print the true mean and long-run variance of a scenario");
  ConfigFlags oracle_flags;
  std::optional<std::size_t> mc_n;
  std::optional<std::size_t> mc_reps;
  oracle->add_option("--config", oracle_flags.config_path, "Config file (key = value sections)");
  add_scenario_flags(*oracle, oracle_flags);
  oracle_flags.add(*oracle, "--seed", "experiment.seed", "Seed for the Monte Carlo estimate", "");
  oracle->add_option("--mc-n", mc_n, "Monte Carlo series length (enables the estimate)")->default_str("100000");
  oracle->add_option("--mc-reps", mc_reps, "Monte Carlo replications (enables the estimate)")->default_str("500");

  // stream
  auto* stream = app.add_subcommand("stream", "Bootstrap numeric records read line by line from stdin");
  std::string stream_method = "ar";
  std::size_t stream_chains = 250;
  std::size_t stream_every = 1;
  double stream_level = 0.9;
  double stream_beta = kBetaOpt;
  std::uint64_t stream_seed = 0;
  std::string snapshot_path;
  std::string resume_path;
  bool no_header = false;
  stream->add_option("--method", stream_method, "ar, iid or block")->capture_default_str();
  stream->add_option("--chains", stream_chains, "Bootstrap chains (B)")->capture_default_str();
  stream->add_option("--every", stream_every, "Emit a row every k observations")->capture_default_str();
  stream->add_option("--level", stream_level, "Nominal confidence level")->capture_default_str();
  stream->add_option("--beta", stream_beta, kBetaHelp)->default_str(num(kBetaOpt));
  stream->add_option("--seed", stream_seed, "Seed")->capture_default_str();
  stream->add_option("--snapshot", snapshot_path, "Write the ensemble state here at end of input or on SIGINT/SIGTERM");
  stream->add_option("--resume", resume_path, "Continue from a snapshot (its chains, beta and seed take effect)");
  stream->add_flag("--no-header", no_header, "Do not print the CSV header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags, run_out, workers);
    if (*bench) return cmd_bench(bench_method, bench_length, bench_chains, bench_seed, bench_beta, bench_out);
    if (*oracle) return cmd_oracle(oracle_flags, mc_n, mc_reps);
    if (*stream) {
      return cmd_stream(stream_method, stream_chains, stream_every, stream_level, stream_beta, stream_seed, snapshot_path,
                        resume_path, !no_header);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
