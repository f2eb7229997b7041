#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tinfo {

/// splitmix64 finalizer, used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// xoshiro256** with its state filled by splitmix64. Cheap to seed, which
/// matters because every MC draw gets its own substream.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;
  explicit Xoshiro256(std::uint64_t seed = 0) {
    for (auto& w : s_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const std::uint64_t out = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// A seeded random stream. Substreams are derived from (seed, name) or
/// (seed, index) so that adding a consumer never perturbs existing ones.
///
/// A mirrored stream yields antithetic variates: `normal()` returns the
/// negated draw and `uniform()` returns 1 - u for the same underlying state.
class Stream {
 public:
  explicit Stream(std::uint64_t seed = 0) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // Substreams inherit the mirror flag.
  Stream substream(std::string_view name) const {
    return Stream(mix64(seed_ ^ hash_name(name)), mirror_);
  }
  Stream substream(std::uint64_t index) const {
    return Stream(mix64(seed_ + 0x632be59bd9b4e019ULL * (index + 1)), mirror_);
  }

  Stream mirrored() const {
    Stream s(*this);
    s.mirror_ = !mirror_;
    return s;
  }
  bool is_mirrored() const noexcept { return mirror_; }

  double normal() {
    double z = normal_(engine_);
    return mirror_ ? -z : z;
  }
  double uniform() {
    double u = std::uniform_real_distribution<double>{}(engine_);
    return mirror_ ? 1.0 - u : u;
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
  }

  Xoshiro256& engine() noexcept { return engine_; }

 private:
  Stream(std::uint64_t seed, bool mirror) : Stream(seed) { mirror_ = mirror; }

  std::uint64_t seed_;
  Xoshiro256 engine_;
  std::normal_distribution<double> normal_;
  bool mirror_ = false;
};

}  // namespace tinfo
