#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace onlineboot {

/// One step of the splitmix64 sequence; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// FNV-1a 64-bit hash, used for content hashes and to fold names into seeds.
std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministically combines seed components into one 64-bit seed.
/// The result depends on the order of the components.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Complete serializable state of a RandomStream.
struct RandomStreamState {
  std::array<std::uint64_t, 4> words{};
  double spare = 0.0;
  bool has_spare = false;

  bool operator==(const RandomStreamState&) const = default;
};

/**
 * A reproducible source of uniform, normal and gamma variates.
 *
 * The bit generator is xoshiro256++; each (seed, stream index) pair selects
 * an independent stream via splitmix64. All variates are produced by
 * algorithms defined here rather than by <random> distributions, so a
 * stream is bit-identical across standard libraries and its whole state
 * can be captured in a snapshot.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() : RandomStream(0, 0) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream_index);
  explicit RandomStream(const RandomStreamState& state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal (Marsaglia polar method, second variate cached).
  double normal();

  /// Gamma(shape, rate): mean shape/rate, variance shape/rate^2.
  /// Valid for any shape > 0, including shape < 1.
  double gamma(double shape, double rate);

  const RandomStreamState& state() const { return state_; }

 private:
  RandomStreamState state_;
};

}  // namespace onlineboot
