#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "onlineboot/random.hpp"

using namespace onlineboot;

TEST_CASE("random stream is reproducible and streams are distinct") {
  RandomStream a(42, 3);
  RandomStream b(42, 3);
  RandomStream c(42, 4);
  int same_as_c = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    CHECK(x == b());
    same_as_c += x == c() ? 1 : 0;
  }
  CHECK(same_as_c == 0);
}

TEST_CASE("derive_seed depends on order") {
  CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
  CHECK(derive_seed({1, 2}) == derive_seed({1, 2}));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform stays in the open unit interval") {
  RandomStream rng(7, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
  CHECK(std::abs(sum / n - 0.5) < 4 * 6.5e-4);
}

TEST_CASE("normal and gamma moments") {
  RandomStream rng(11, 0);
  const int n = 400000;

  SUBCASE("standard normal") {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      s += z;
      s2 += z * z;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }

  for (double shape : {0.07, 1.0, 2.5}) {
    CAPTURE(shape);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape, shape);
      REQUIRE(g >= 0.0);
      s += g;
      s2 += g * g;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    // Gamma(a, a): mean 1, variance 1/a, fourth central moment (3a + 6)/a^3.
    const double se_mean = std::sqrt(1.0 / shape / n);
    const double se_var = std::sqrt(((3 * shape + 6) / (shape * shape * shape) - 1.0 / (shape * shape)) / n);
    CHECK(std::abs(mean - 1.0) < 4 * se_mean);
    CHECK(std::abs(var - 1.0 / shape) < 4 * se_var);
  }
}

TEST_CASE("gamma rejects non-positive parameters") {
  RandomStream rng;
  CHECK_THROWS_AS(rng.gamma(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.gamma(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("restoring a captured state continues the stream exactly") {
  RandomStream rng(5, 9);
  for (int i = 0; i < 3; ++i) rng.normal();  // leaves a cached spare
  REQUIRE(rng.state().has_spare);
  RandomStream copy(rng.state());
  for (int i = 0; i < 100; ++i) {
    CHECK(rng.normal() == copy.normal());
    CHECK(rng.gamma(0.3, 0.3) == copy.gamma(0.3, 0.3));
  }
}
