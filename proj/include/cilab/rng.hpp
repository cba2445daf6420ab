#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace cilab {

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random source. All distributions are implemented locally on
// top of the raw mt19937_64 word stream (which the standard pins bit-exactly),
// so streams do not depend on implementation-defined library transforms.
//
// Every consumer derives its generator through substream(), which mixes the
// run's root seed with a stream name and up to two indices. Substreams with
// distinct names or indices are independent, so e.g. the batch order of task 3
// does not shift when task 2 gains an epoch.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                      std::uint64_t index = 0, std::uint64_t index2 = 0) {
    std::uint64_t s = splitmix64(root ^ fnv1a(name));
    s = splitmix64(s ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    s = splitmix64(s ^ (0xbf58476d1ce4e5b9ULL * (index2 + 1)));
    return s;
  }

  static Rng substream(std::uint64_t root, std::string_view name,
                       std::uint64_t index = 0, std::uint64_t index2 = 0) {
    return Rng(substream_seed(root, name, index, index2));
  }

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<double> gaussian_vector(std::size_t n) {
    std::vector<double> out(n);
    for (auto& x : out) x = gaussian();
    return out;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cilab
