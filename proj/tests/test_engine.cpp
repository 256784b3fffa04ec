#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "onlineboot/engine.hpp"
#include "onlineboot/random.hpp"

using namespace onlineboot;

namespace {

std::vector<double> normal_series(std::size_t n, std::uint64_t seed, double scale = 1.0, double shift = 0.0) {
  RandomStream rng(seed, 999);
  std::vector<double> out(n);
  for (auto& x : out) x = shift + scale * rng.normal();
  return out;
}

Ensemble run(Method method, std::span<const double> xs, std::size_t chains, std::uint64_t seed) {
  Ensemble ens(EnsembleConfig{method, chains, 1, kBetaOpt, seed, 0});
  for (double x : xs) ens.observe(x);
  return ens;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("method names") {
  for (auto m : {Method::ar, Method::iid, Method::block}) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("AR"), std::invalid_argument);
}

TEST_CASE("fold_weighted") {
  SUBCASE("first observation returns x whatever the weight") {
    for (double v : {0.3, 1.0, 4.0, -2.0}) {
      double vbar = 0.0;
      std::vector<double> xs{0.0};
      const std::vector<double> x{7.25};
      CHECK(fold_weighted(vbar, xs, x, 1, v));
      CHECK(xs[0] == 7.25);
      CHECK(vbar == v);
    }
  }
  SUBCASE("zero denominator gives NaN") {
    double vbar = 0.0;
    std::vector<double> xs{0.0};
    const std::vector<double> x{1.0};
    CHECK_FALSE(fold_weighted(vbar, xs, x, 1, 0.0));
    CHECK(std::isnan(xs[0]));
  }
}

TEST_CASE("chain_update") {
  SUBCASE("t = 1 gives x1 for any zeta") {
    for (double z : {-3.0, 0.0, 1.0}) {
      BootstrapChain c{{}, 0.0, {0.0}};
      const std::vector<double> x{2.5};
      chain_update(c, x, 1, z, kBetaOpt);
      if (1.0 + z != 0.0) CHECK(c.xbar_star[0] == 2.5);
    }
  }
  SUBCASE("zero innovations match a batch weighted average") {
    // With zeta = 0 everywhere, V_1 = 1 and every later weight stays at 1.
    // Seed the first weight differently to exercise the recursion.
    BootstrapChain c{{}, 0.0, {0.0}};
    std::vector<double> weights;
    std::vector<double> data;
    for (std::uint64_t t = 1; t <= 50; ++t) {
      const double x = std::cos(static_cast<double>(t));
      const double zeta = t == 1 ? 0.8 : 0.0;
      chain_update(c, std::vector<double>{x}, t, zeta, kBetaOpt);
      weights.push_back(c.weight.v);
      data.push_back(x);
    }
    // Independent batch weights: V_1 = 1.8, V_t = 1 + rho_t (V_{t-1} - 1).
    double v = 1.8;
    double num = 1.8 * data[0];
    double den = 1.8;
    for (std::size_t i = 1; i < data.size(); ++i) {
      const double r = 1.0 - std::pow(static_cast<double>(i + 1), -kBetaOpt);
      v = 1.0 + r * (v - 1.0);
      CHECK(weights[i] == doctest::Approx(v).epsilon(1e-14));
      num += v * data[i];
      den += v;
    }
    CHECK(c.xbar_star[0] == doctest::Approx(num / den).epsilon(1e-12));
  }
  SUBCASE("constant data stays constant") {
    BootstrapChain c{{}, 0.0, {0.0}};
    RandomStream rng(1, 0);
    for (std::uint64_t t = 1; t <= 200; ++t) {
      chain_update(c, std::vector<double>{3.5}, t, rng.normal(), kBetaOpt);
      if (std::isfinite(c.xbar_star[0])) CHECK(c.xbar_star[0] == doctest::Approx(3.5).epsilon(1e-12));
    }
  }
  SUBCASE("out of sequence") {
    BootstrapChain c{{}, 0.0, {0.0}};
    CHECK_THROWS_AS(chain_update(c, std::vector<double>{1.0}, 2, 0.0, kBetaOpt), std::invalid_argument);
  }
}

TEST_CASE("ensemble basics") {
  Ensemble ens(EnsembleConfig{Method::ar, 8, 1, kBetaOpt, 3, 0});
  for (double x : {1.0, 2.0, 3.0}) ens.observe(x);
  CHECK(ens.t() == 3);
  CHECK(ens.xbar()[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(ens.observe(std::vector<double>{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(Ensemble(EnsembleConfig{Method::ar, 8, 1, 0.5, 3, 0}), std::domain_error);
  CHECK_THROWS_AS(Ensemble(EnsembleConfig{Method::ar, 8, 0, kBetaOpt, 3, 0}), std::invalid_argument);
}

TEST_CASE("first observation: every replicate equals x1") {
  for (auto m : {Method::ar, Method::iid, Method::block}) {
    Ensemble ens(EnsembleConfig{m, 50, 2, kBetaOpt, 5, 0});
    ens.observe(std::vector<double>{-1.5, 4.0});
    for (std::size_t b = 0; b < 50; ++b) {
      if (!ens.replicate_finite(b)) continue;
      CHECK(ens.replicate(b)[0] == doctest::Approx(-1.5).epsilon(1e-15));
      CHECK(ens.replicate(b)[1] == doctest::Approx(4.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("online replicates equal the batch weighted average of realized weights") {
  for (auto m : {Method::ar, Method::iid}) {
    CAPTURE(method_name(m));
    const std::size_t n = 10000, chains = 5, d = 3;
    Ensemble ens(EnsembleConfig{m, chains, d, kBetaOpt, 17, 0});
    RandomStream data(4, 4);
    std::vector<double> num(chains * d, 0.0), den(chains, 0.0);
    std::vector<double> x(d);
    for (std::size_t t = 1; t <= n; ++t) {
      for (std::size_t k = 0; k < d; ++k) x[k] = 10.0 * k + data.normal();
      ens.observe(x);
      for (std::size_t b = 0; b < chains; ++b) {
        const double v = ens.chain(b).weight.v;
        den[b] += v;
        for (std::size_t k = 0; k < d; ++k) num[b * d + k] += v * x[k];
      }
    }
    for (std::size_t b = 0; b < chains; ++b) {
      for (std::size_t k = 0; k < d; ++k) CHECK(close_rel(ens.replicate(b)[k], num[b * d + k] / den[b], 1e-10));
    }
  }
}

TEST_CASE("BLOCK replicates equal an independent replay of the innovation draws") {
  const std::size_t n = 130, chains = 3;
  const std::uint64_t seed = 21;
  const auto xs = normal_series(n, 8);
  Ensemble ens(EnsembleConfig{Method::block, chains, 1, kBetaOpt, seed, 0});

  struct Replay {
    RandomStream rng;
    std::size_t m = 0;
    std::vector<double> innov;  // innov[k] = zeta_{k+1-m}
    std::vector<double> weights;
  };
  std::vector<Replay> replay;
  for (std::size_t b = 0; b < chains; ++b) replay.push_back({RandomStream(seed, b), 0, {}, {}});

  for (std::size_t t = 1; t <= n; ++t) {
    ens.observe(xs[t - 1]);
    std::size_t m = 1;
    while ((m + 1) * (m + 1) * (m + 1) <= t) ++m;
    const double q = 2.0 / (3.0 * m) + 1.0 / (3.0 * m * m);
    for (std::size_t b = 0; b < chains; ++b) {
      auto& r = replay[b];
      if (m != r.m) {
        r.m = m;
        r.innov.resize(t + 2 * m);
        for (auto& z : r.innov) z = r.rng.gamma(q, q);
        r.weights.clear();
        for (std::size_t i = 1; i <= t; ++i) {
          double w = 0.0;
          for (long j = -static_cast<long>(m); j <= static_cast<long>(m); ++j) {
            const double kern = (1.0 - std::abs(j) / static_cast<double>(m)) / static_cast<double>(m);
            w += kern * r.innov[static_cast<std::size_t>(static_cast<long>(i) - j - 1 + static_cast<long>(m))];
          }
          r.weights.push_back(w);
        }
      } else {
        r.innov.push_back(r.rng.gamma(q, q));
        double w = 0.0;
        for (long j = -static_cast<long>(m); j <= static_cast<long>(m); ++j) {
          const double kern = (1.0 - std::abs(j) / static_cast<double>(m)) / static_cast<double>(m);
          w += kern * r.innov[static_cast<std::size_t>(static_cast<long>(t) - j - 1 + static_cast<long>(m))];
        }
        r.weights.push_back(w);
      }
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < t; ++i) {
        num += r.weights[i] * xs[i];
        den += r.weights[i];
      }
      if (den != 0.0) CHECK(close_rel(ens.replicate(b)[0], num / den, 1e-10));
    }
  }
}

TEST_CASE("scale equivariance and location invariance") {
  const auto xs = normal_series(3000, 2);
  for (auto m : {Method::ar, Method::iid, Method::block}) {
    CAPTURE(method_name(m));
    std::vector<double> scaled(xs), shifted(xs);
    for (auto& x : scaled) x *= -4.0;
    for (auto& x : shifted) x += 1000.0;
    const auto base = run(m, xs, 40, 6);
    const auto sc = run(m, scaled, 40, 6);
    const auto sh = run(m, shifted, 40, 6);
    for (std::size_t b = 0; b < 40; ++b) CHECK(close_rel(sc.replicate(b)[0], -4.0 * base.replicate(b)[0], 1e-10));
    const double v = variance_estimate(base)[0];
    CHECK(close_rel(variance_estimate(sc)[0], 16.0 * v, 1e-9));
    CHECK(std::abs(variance_estimate(sh)[0] - v) < 1e-6 * v);
    const auto ci = confidence_interval(base, 0.9);
    const auto ci_sc = confidence_interval(sc, 0.9);
    CHECK(close_rel(ci_sc.ci_lower[0], -4.0 * ci.ci_upper[0], 1e-9));
    CHECK(close_rel(ci_sc.ci_upper[0], -4.0 * ci.ci_lower[0], 1e-9));
  }
}

TEST_CASE("vector data equals per-coordinate scalar runs") {
  for (auto m : {Method::ar, Method::iid, Method::block}) {
    const std::size_t n = 700, d = 3;
    std::vector<std::vector<double>> cols;
    for (std::size_t k = 0; k < d; ++k) cols.push_back(normal_series(n, 30 + k, 1.0 + k));
    Ensemble joint(EnsembleConfig{m, 20, d, kBetaOpt, 9, 0});
    for (std::size_t t = 0; t < n; ++t) joint.observe(std::vector<double>{cols[0][t], cols[1][t], cols[2][t]});
    for (std::size_t k = 0; k < d; ++k) {
      const auto single = run(m, cols[k], 20, 9);
      for (std::size_t b = 0; b < 20; ++b) CHECK(joint.replicate(b)[k] == single.replicate(b)[0]);
      CHECK(variance_estimate(joint)[k] == variance_estimate(single)[0]);
    }
  }
}

TEST_CASE("summaries need chains and data") {
  Ensemble none(EnsembleConfig{Method::ar, 0, 1, kBetaOpt, 1, 0});
  none.observe(1.0);
  none.observe(2.0);
  CHECK(none.xbar()[0] == 1.5);
  CHECK_THROWS_WITH_AS(variance_estimate(none), "no chains", InsufficientDataError);
  CHECK_THROWS_AS(confidence_interval(none, 0.9), InsufficientDataError);

  Ensemble one_obs(EnsembleConfig{Method::ar, 10, 1, kBetaOpt, 1, 0});
  one_obs.observe(1.0);
  CHECK_THROWS_AS(variance_estimate(one_obs), InsufficientDataError);
  const auto s = confidence_interval(one_obs, 0.9);
  CHECK(std::isnan(s.variance_est[0]));

  Ensemble ens(EnsembleConfig{Method::ar, 10, 1, kBetaOpt, 1, 0});
  ens.observe(1.0);
  ens.observe(2.0);
  CHECK_THROWS_AS(confidence_interval(ens, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(confidence_interval(ens, 0.0), std::invalid_argument);
  const std::vector<double> empty;
  CHECK_THROWS_AS(quantiles(ens, empty), std::invalid_argument);
}

TEST_CASE("quantile positions and interpolation") {
  CHECK(quantile_position(250, 0.05) == doctest::Approx(12.55).epsilon(1e-14));
  CHECK(quantile_position(250, 0.95) == doctest::Approx(238.45).epsilon(1e-14));
  CHECK(quantile_position(250, 0.001) == 1.0);
  CHECK(quantile_position(250, 0.999) == 250.0);

  const std::vector<double> three{1.0, 2.0, 3.0};
  CHECK(interpolated_quantile(three, 0.5) == 2.0);
  CHECK(interpolated_quantile(three, 0.375) == doctest::Approx(1.5));
  const std::vector<double> single{4.2};
  for (double p : {0.01, 0.5, 0.99}) CHECK(interpolated_quantile(single, p) == 4.2);

  RandomStream rng(12, 0);
  std::vector<double> z(10000);
  for (auto& v : z) v = rng.normal();
  std::sort(z.begin(), z.end());
  CHECK(std::abs(interpolated_quantile(z, 0.9) - 1.2816) < 0.05);
}

TEST_CASE("a single chain: every quantile is its replicate") {
  Ensemble ens(EnsembleConfig{Method::ar, 1, 1, kBetaOpt, 4, 0});
  for (double x : {0.3, -1.0, 2.0, 5.0}) ens.observe(x);
  const std::vector<double> probs{0.05, 0.5, 0.95};
  for (const auto& [p, q] : quantiles(ens, probs)) CHECK(q[0] == ens.replicate(0)[0]);
}

TEST_CASE("identical chains: the spread around the data mean comes only from the shared offset") {
  Ensemble fresh(EnsembleConfig{Method::ar, 6, 1, kBetaOpt, 0, 0});
  EnsembleState st = fresh.state();
  for (auto& r : st.rngs) r = RandomStream(77, 0);
  Ensemble ens(st);
  const auto xs = normal_series(500, 3);
  for (double x : xs) ens.observe(x);
  for (std::size_t b = 1; b < 6; ++b) CHECK(ens.replicate(b)[0] == ens.replicate(0)[0]);
  const double offset = ens.replicate(0)[0] - ens.xbar()[0];
  CHECK(variance_estimate(ens)[0] == doctest::Approx(500.0 * 6.0 / 5.0 * offset * offset).epsilon(1e-12));
  const auto ci = confidence_interval(ens, 0.9);
  CHECK(ci.ci_lower[0] == ci.ci_upper[0]);

  Ensemble constant(st);
  for (int i = 0; i < 100; ++i) constant.observe(2.0);
  CHECK(variance_estimate(constant)[0] == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("non-finite chains are excluded from summaries") {
  Ensemble ens(EnsembleConfig{Method::ar, 5, 1, kBetaOpt, 2, 0});
  for (double x : {1.0, 2.0, 4.0}) ens.observe(x);
  EnsembleState st = ens.state();
  st.xbar_star[2] = std::numeric_limits<double>::quiet_NaN();
  Ensemble broken(st);
  const auto s = confidence_interval(broken, 0.9);
  CHECK(s.chains_used == 4);
  CHECK(s.chains_excluded == 1);
  CHECK(std::isfinite(s.variance_est[0]));

  SUBCASE("transform that fails on some replicates") {
    const Transform log_tf = [](std::span<const double> r) { return std::log(r[0]); };
    EnsembleState st2 = ens.state();
    st2.xbar_star[0] = -1.0;
    Ensemble neg(st2);
    const auto t = confidence_interval(neg, 0.9, log_tf);
    CHECK(t.chains_excluded == 1);
    CHECK(t.center[0] == doctest::Approx(std::log(7.0 / 3.0)));
  }
}

TEST_CASE("variance estimate is close to 1 for iid N(0,1) under IID weights") {
  int inside = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    const auto xs = normal_series(5000, 100 + s);
    const auto ens = run(Method::iid, xs, 250, 200 + s);
    const double v = variance_estimate(ens)[0];
    inside += (v >= 0.7 && v <= 1.3) ? 1 : 0;
  }
  CHECK(inside >= 38);
}

TEST_CASE("AR variance estimate approaches the MA(2) long-run variance") {
  // X_i = e_i + e_{i-1}/2 + e_{i-2}/4: long-run variance 1.75^2 = 3.0625.
  double total = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto e = normal_series(5002, 300 + s);
    std::vector<double> xs(5000);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = e[i + 2] + 0.5 * e[i + 1] + 0.25 * e[i];
    total += variance_estimate(run(Method::ar, xs, 250, 400 + s))[0];
  }
  CHECK(std::abs(total / seeds - 3.0625) < 0.15 * 3.0625);
}

TEST_CASE("AR and IID state does not grow") {
  for (auto m : {Method::ar, Method::iid}) {
    Ensemble ens(EnsembleConfig{m, 64, 2, kBetaOpt, 1, 0});
    ens.observe(std::vector<double>{0.0, 0.0});
    const auto bytes = ens.state_bytes();
    for (int i = 0; i < 20000; ++i) ens.observe(std::vector<double>{1.0 * i, 2.0});
    CHECK(ens.state_bytes() == bytes);
  }
}

TEST_CASE("BLOCK regenerates exactly at cubes") {
  Ensemble ens(EnsembleConfig{Method::block, 4, 1, kBetaOpt, 1, 0});
  std::vector<std::uint64_t> at;
  for (std::uint64_t t = 1; t <= 1000; ++t) {
    ens.observe(0.1 * static_cast<double>(t));
    if (ens.last_step_regenerated()) at.push_back(t);
  }
  CHECK(at == std::vector<std::uint64_t>{8, 27, 64, 125, 216, 343, 512, 729, 1000});
  CHECK(ens.regenerations() == 9);
}

TEST_CASE("BLOCK history cap") {
  Ensemble ens(EnsembleConfig{Method::block, 4, 1, kBetaOpt, 1, 10});
  for (int i = 0; i < 10; ++i) ens.observe(1.0);
  CHECK_THROWS_AS(ens.observe(1.0), CapacityError);
  CHECK(ens.t() == 10);
}
