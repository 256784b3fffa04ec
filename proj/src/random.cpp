#include "onlineboot/random.hpp"

#include <cmath>
#include <stdexcept>

namespace onlineboot {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t acc = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) {
    std::uint64_t s = acc ^ p;
    acc = splitmix64(s);
  }
  return acc;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_index) {
  std::uint64_t s = derive_seed({seed, stream_index});
  for (auto& w : state_.words) w = splitmix64(s);
}

RandomStream::result_type RandomStream::operator()() {
  auto& s = state_.words;
  const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  return result;
}

double RandomStream::uniform() {
  // 53 random bits, offset by half an ulp so 0 is never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (state_.has_spare) {
    state_.has_spare = false;
    return state_.spare;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  state_.spare = v * f;
  state_.has_spare = true;
  return u * f;
}

double RandomStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be positive");
  // Marsaglia & Tsang (2000). For shape < 1 draw Gamma(shape + 1) and
  // scale by U^(1/shape).
  const bool boost = shape < 1.0;
  const double a = boost ? shape + 1.0 : shape;
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  double x;
  for (;;) {
    double z, v;
    do {
      z = normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z || std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) {
      x = d * v;
      break;
    }
  }
  if (boost) x *= std::pow(uniform(), 1.0 / shape);
  return x / rate;
}

}  // namespace onlineboot
