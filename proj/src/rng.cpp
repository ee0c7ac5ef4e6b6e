#include "scbf/rng.hpp"

#include <cmath>
#include <numbers>

namespace scbf {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t w : words) h = mix64(h + kGolden + mix64(w + kGolden));
  return h;
}

double to_unit_open(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

CounterStream::CounterStream(const StreamKey& key, std::uint64_t substream)
    : key_(hash_words({key.seed, key.trajectory, static_cast<std::uint64_t>(key.channel), substream})) {}

CounterStream::result_type CounterStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterStream::uniform() { return to_unit_open((*this)()); }

double CounterStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

GaussianPair keyed_gaussian_pair(std::uint64_t key) {
  const double u1 = to_unit_open(mix64(key + kGolden));
  const double u2 = to_unit_open(mix64(key + 2 * kGolden));
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

}  // namespace scbf
