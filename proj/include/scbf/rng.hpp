#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace scbf {

/// Independent random streams of one trajectory.
enum class Channel : std::uint64_t {
  wiener = 1,
  jump_times = 2,
  marks = 3,
  bridge = 4,
  initial = 5,
  corpus = 6,
};

/// (seed, trajectory index, channel) identifies a stream; streams with
/// distinct keys are statistically independent.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  Channel channel = Channel::wiener;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive hash of a word sequence.
std::uint64_t hash_words(std::initializer_list<std::uint64_t> words);

/// Uniform in (0, 1) from 53 random bits of x.
double to_unit_open(std::uint64_t x);

/// Counter-based generator: output i is mix64(key + (i + 1) * golden). No
/// internal state beyond the counter, so any draw is addressable and two
/// generators with equal keys produce bit-identical sequences. Satisfies
/// UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit CounterStream(std::uint64_t key) : key_(key) {}
  CounterStream(const StreamKey& key, std::uint64_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  double uniform();
  /// Standard normal by Box-Muller; consumes two words per pair.
  double gaussian();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Two independent standard normals addressed directly by a key.
struct GaussianPair {
  double first;
  double second;
};
GaussianPair keyed_gaussian_pair(std::uint64_t key);

}  // namespace scbf
