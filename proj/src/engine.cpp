#include "onlineboot/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace onlineboot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void update_running_mean(std::span<double> mean, std::span<const double> x, std::uint64_t t) {
  const double td = static_cast<double>(t);
  for (std::size_t k = 0; k < mean.size(); ++k) mean[k] = (1.0 - 1.0 / td) * mean[k] + x[k] / td;
}

template <typename T>
std::size_t bytes_of(const std::vector<T>& v) {
  return v.capacity() * sizeof(T);
}

/// Finite replicates in chain order, mapped through `transform` when given.
/// Each row has dim entries (or one under a transform).
struct ReplicateTable {
  std::vector<std::vector<double>> columns;
  std::vector<double> center;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

ReplicateTable collect(const Ensemble& ens, const Transform* transform) {
  ReplicateTable table;
  const std::size_t width = transform ? 1 : ens.dim();
  table.columns.assign(width, {});
  for (auto& c : table.columns) c.reserve(ens.chain_count());
  if (transform) {
    table.center = {(*transform)(ens.xbar())};
  } else {
    table.center.assign(ens.xbar().begin(), ens.xbar().end());
  }
  for (std::size_t b = 0; b < ens.chain_count(); ++b) {
    if (!ens.replicate_finite(b)) {
      ++table.excluded;
      continue;
    }
    if (transform) {
      const double r = (*transform)(ens.replicate(b));
      if (!std::isfinite(r)) {
        ++table.excluded;
        continue;
      }
      table.columns[0].push_back(r);
    } else {
      const auto rep = ens.replicate(b);
      for (std::size_t k = 0; k < width; ++k) table.columns[k].push_back(rep[k]);
    }
    ++table.used;
  }
  return table;
}

std::vector<double> centered_variance(const ReplicateTable& table, std::uint64_t t) {
  if (t < 2) throw InsufficientDataError("variance estimate needs at least 2 observations");
  if (table.used < 2) throw InsufficientDataError("variance estimate needs at least 2 finite chains");
  std::vector<double> out(table.columns.size());
  const double td = static_cast<double>(t);
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    double acc = 0.0;
    for (double r : table.columns[k]) {
      const double d = r - table.center[k];
      acc += d * d;
    }
    out[k] = td * acc / static_cast<double>(table.used - 1);
  }
  return out;
}

void require_chains(const Ensemble& ens) {
  if (ens.chain_count() == 0) throw InsufficientDataError("no chains");
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::ar:
      return "ar";
    case Method::iid:
      return "iid";
    case Method::block:
      return "block";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "ar") return Method::ar;
  if (name == "iid") return Method::iid;
  if (name == "block") return Method::block;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected ar, iid or block)");
}

bool fold_weighted(double& vbar, std::span<double> xbar_star, std::span<const double> x, std::uint64_t t,
                   double v) {
  const double td = static_cast<double>(t);
  const double prior = (td - 1.0) * vbar;
  const double denom = prior + v;
  bool ok = true;
  if (denom == 0.0) {
    std::fill(xbar_star.begin(), xbar_star.end(), kNaN);
    ok = false;
  } else {
    for (std::size_t k = 0; k < xbar_star.size(); ++k) xbar_star[k] = (prior * xbar_star[k] + x[k] * v) / denom;
  }
  vbar = (1.0 - 1.0 / td) * vbar + v / td;
  return ok;
}

void chain_update(BootstrapChain& chain, std::span<const double> x, std::uint64_t t, double zeta, double beta) {
  if (t != chain.weight.t + 1) throw std::invalid_argument("chain_update: step index out of sequence");
  if (x.size() != chain.xbar_star.size()) throw std::invalid_argument("chain_update: dimension mismatch");
  chain.weight = ar_next(chain.weight, zeta, beta);
  fold_weighted(chain.vbar, chain.xbar_star, x, t, chain.weight.v);
}

Ensemble::Ensemble(const EnsembleConfig& config) {
  if (config.dim == 0) throw std::invalid_argument("ensemble dimension must be >= 1");
  if (config.method == Method::ar) validate_beta(config.beta);
  state_.config = config;
  state_.xbar.assign(config.dim, 0.0);
  state_.v.assign(config.chains, 0.0);
  state_.vbar.assign(config.chains, 0.0);
  state_.xbar_star.assign(config.chains * config.dim, 0.0);
  state_.rngs.reserve(config.chains);
  for (std::size_t b = 0; b < config.chains; ++b) state_.rngs.emplace_back(config.seed, b);
}

Ensemble::Ensemble(EnsembleState state) : state_(std::move(state)) {
  const auto& c = state_.config;
  if (c.dim == 0) throw std::invalid_argument("ensemble dimension must be >= 1");
  if (c.method == Method::ar) validate_beta(c.beta);
  if (state_.xbar.size() != c.dim || state_.v.size() != c.chains || state_.vbar.size() != c.chains ||
      state_.xbar_star.size() != c.chains * c.dim || state_.rngs.size() != c.chains) {
    throw std::invalid_argument("inconsistent ensemble state");
  }
  if (c.method == Method::block) {
    if (state_.history.size() != state_.t * c.dim) throw std::invalid_argument("inconsistent block history");
    if (state_.block_m > 0) {
      if (state_.rings.size() != c.chains * (2 * state_.block_m + 1)) {
        throw std::invalid_argument("inconsistent block innovation buffers");
      }
      kernel_ = block_kernel_table(state_.block_m);
    }
  }
}

std::span<const double> Ensemble::replicate(std::size_t b) const {
  return std::span<const double>(state_.xbar_star).subspan(b * dim(), dim());
}

bool Ensemble::replicate_finite(std::size_t b) const {
  const auto r = replicate(b);
  return std::all_of(r.begin(), r.end(), [](double x) { return std::isfinite(x); });
}

BootstrapChain Ensemble::chain(std::size_t b) const {
  const auto r = replicate(b);
  return {{state_.t, state_.v[b]}, state_.vbar[b], std::vector<double>(r.begin(), r.end())};
}

std::size_t Ensemble::state_bytes() const {
  return bytes_of(state_.xbar) + bytes_of(state_.v) + bytes_of(state_.vbar) + bytes_of(state_.xbar_star) +
         bytes_of(state_.rngs) + bytes_of(state_.history) + bytes_of(state_.rings) + bytes_of(kernel_) +
         bytes_of(scratch_);
}

void Ensemble::observe(std::span<const double> x) {
  if (x.size() != dim()) {
    throw std::invalid_argument("observation has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim()));
  }
  if (method() == Method::block) {
    observe_block(x);
  } else {
    observe_online(x);
  }
}

void Ensemble::observe_online(std::span<const double> x) {
  const std::uint64_t t = ++state_.t;
  update_running_mean(state_.xbar, x, t);

  double rho_t = 0.0;
  double scale = 1.0;
  const bool ar = method() == Method::ar;
  if (ar && t > 1) {
    rho_t = 1.0 - std::pow(static_cast<double>(t), -state_.config.beta);
    scale = std::sqrt(1.0 - rho_t * rho_t);
  }
  const std::size_t d = dim();
  std::span<double> all(state_.xbar_star);
  for (std::size_t b = 0; b < chain_count(); ++b) {
    const double zeta = state_.rngs[b].normal();
    double& v = state_.v[b];
    v = ar ? ar_step(v, rho_t, scale, zeta) : iid_next(zeta);
    fold_weighted(state_.vbar[b], all.subspan(b * d, d), x, t, v);
  }
}

void Ensemble::observe_block(std::span<const double> x) {
  const std::size_t cap = state_.config.max_history;
  if (cap != 0 && state_.t + 1 > cap) {
    throw CapacityError("block bootstrap history cap of " + std::to_string(cap) + " observations exceeded");
  }
  const std::uint64_t t = ++state_.t;
  state_.history.insert(state_.history.end(), x.begin(), x.end());
  update_running_mean(state_.xbar, x, t);

  const std::size_t m = block_size(t);
  if (m != state_.block_m) {
    state_.last_regenerated = t > 1;
    if (t > 1) ++state_.regenerations;
    state_.block_m = m;
    regenerate_block();
    return;
  }
  state_.last_regenerated = false;

  const double q = block_shape(m);
  const std::size_t width = 2 * m + 1;
  const std::size_t d = dim();
  std::span<double> all(state_.xbar_star);
  for (std::size_t b = 0; b < chain_count(); ++b) {
    double* ring = state_.rings.data() + b * width;
    ring[state_.ring_head] = state_.rngs[b].gamma(q, q);
    const std::size_t head = (state_.ring_head + 1) % width;
    double v = 0.0;
    for (std::size_t k = 0; k < width; ++k) v += kernel_[k] * ring[(head + k) % width];
    state_.v[b] = v;
    fold_weighted(state_.vbar[b], all.subspan(b * d, d), x, t, v);
  }
  state_.ring_head = (state_.ring_head + 1) % width;
}

void Ensemble::regenerate_block() {
  const std::size_t m = state_.block_m;
  const std::size_t n = state_.t;
  const std::size_t d = dim();
  const std::size_t width = 2 * m + 1;
  const double q = block_shape(m);
  kernel_ = block_kernel_table(m);
  state_.rings.assign(chain_count() * width, 0.0);
  state_.ring_head = 0;
  scratch_.resize(n + 2 * m);

  for (std::size_t b = 0; b < chain_count(); ++b) {
    for (auto& z : scratch_) z = state_.rngs[b].gamma(q, q);
    const BlockWeightVector w = block_regenerate(n, m, scratch_);
    double total = 0.0;
    double* xs = state_.xbar_star.data() + b * d;
    std::fill(xs, xs + d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      total += w.weights[i];
      for (std::size_t k = 0; k < d; ++k) xs[k] += w.weights[i] * state_.history[i * d + k];
    }
    if (total == 0.0) {
      std::fill(xs, xs + d, kNaN);
    } else {
      for (std::size_t k = 0; k < d; ++k) xs[k] /= total;
    }
    state_.vbar[b] = total / static_cast<double>(n);
    state_.v[b] = w.weights[n - 1];
    // Keep zeta_{n-m .. n+m} for the incremental steps that follow.
    std::copy(scratch_.end() - static_cast<std::ptrdiff_t>(width), scratch_.end(),
              state_.rings.begin() + static_cast<std::ptrdiff_t>(b * width));
  }
}

std::vector<double> variance_estimate(const Ensemble& ensemble) {
  require_chains(ensemble);
  return centered_variance(collect(ensemble, nullptr), ensemble.t());
}

double variance_estimate(const Ensemble& ensemble, const Transform& transform) {
  require_chains(ensemble);
  const auto table = collect(ensemble, &transform);
  if (!std::isfinite(table.center[0])) throw std::domain_error("transform of the data mean is not finite");
  return centered_variance(table, ensemble.t())[0];
}

double quantile_position(std::size_t count, double p) {
  const double pos = p * static_cast<double>(count + 1);
  return std::clamp(pos, 1.0, static_cast<double>(count));
}

double interpolated_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InsufficientDataError("quantile of an empty sample");
  const double pos = quantile_position(sorted.size(), p);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo >= sorted.size()) return sorted.back();
  // A zero fraction must not touch the upper neighbour (it may be infinite).
  if (frac == 0.0) return sorted[lo - 1];
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

std::map<double, std::vector<double>> quantiles(const Ensemble& ensemble, std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("quantiles: empty probability list");
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantiles: probabilities must lie in (0, 1)");
  }
  require_chains(ensemble);
  auto table = collect(ensemble, nullptr);
  if (table.used == 0) throw InsufficientDataError("no finite chains");
  for (auto& c : table.columns) std::sort(c.begin(), c.end());
  std::map<double, std::vector<double>> out;
  for (double p : probs) {
    auto& row = out[p];
    for (const auto& c : table.columns) row.push_back(interpolated_quantile(c, p));
  }
  return out;
}

UncertaintySummary confidence_interval(const Ensemble& ensemble, double level, const Transform& transform) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  require_chains(ensemble);
  auto table = collect(ensemble, transform ? &transform : nullptr);
  if (transform && !std::isfinite(table.center[0])) {
    throw std::domain_error("transform of the data mean is not finite");
  }
  if (table.used < 2) throw InsufficientDataError("confidence interval needs at least 2 finite chains");

  UncertaintySummary out;
  out.level = level;
  out.chains_used = table.used;
  out.chains_excluded = table.excluded;
  out.center = table.center;
  if (ensemble.t() >= 2) {
    out.variance_est = centered_variance(table, ensemble.t());
  } else {
    out.variance_est.assign(table.columns.size(), std::numeric_limits<double>::quiet_NaN());
  }
  for (auto& c : table.columns) {
    std::sort(c.begin(), c.end());
    out.ci_lower.push_back(interpolated_quantile(c, (1.0 - level) / 2.0));
    out.ci_upper.push_back(interpolated_quantile(c, (1.0 + level) / 2.0));
  }
  return out;
}

}  // namespace onlineboot
