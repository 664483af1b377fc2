// Deterministic, splittable random streams.
//
// Reproducibility contract: a stream is fully determined by the 64-bit key it
// was built from, independent of platform and of how many other streams exist.
// Substreams are derived by hashing (key, index) pairs, so replicate i of an
// experiment always sees the same draws no matter how replicates are scheduled
// across worker threads.
#pragma once

#include <cmath>
#include <cstdint>

namespace hwflow {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless mix of several 64-bit words into one key.
inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_key(mix_key(a, b), c);
}

// xoshiro256++ with splitmix64 seeding; normals via the polar method.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) {
    std::uint64_t sm = key;
    for (auto& w : s_) w = splitmix64(sm);
    have_cached_ = false;
  }

  static RngStream substream(std::uint64_t master, std::uint64_t id) {
    return RngStream(mix_key(master, id));
  }
  static RngStream substream(std::uint64_t master, std::uint64_t id, std::uint64_t sub) {
    return RngStream(mix_key(master, id, sub));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1], safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    have_cached_ = true;
    return u * f;
  }

  double exponential() { return -std::log(uniform_pos()); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool have_cached_;
};

}  // namespace hwflow
