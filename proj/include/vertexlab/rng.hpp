#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>

namespace vertexlab {

namespace detail {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: output k is a keyed hash of k, so streams split
// by key are independent and any position is reachable without replay.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_(derive_key(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t x = detail::mix64(ctr_++ * 0x9e3779b97f4a7c15ull + key_);
    return detail::mix64(x ^ key_);
  }

  // Uniform on (0,1) with 53-bit resolution.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  Rng split(std::uint64_t stream) const {
    Rng r;
    r.key_ = derive_key(key_, stream + 1);
    return r;
  }

  std::uint64_t counter() const { return ctr_; }
  void seek(std::uint64_t c) { ctr_ = c; }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return detail::mix64(detail::mix64(seed ^ 0x6a09e667f3bcc909ull) + stream * 0xd1b54a32d192ed03ull);
  }

  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

inline constexpr const char* kSeedEnv = "VERTEXLAB_SEED";

// VERTEXLAB_SEED, when set and parseable, wins over the supplied seed.
inline std::uint64_t resolve_seed(std::uint64_t fallback) {
  if (const char* s = std::getenv(kSeedEnv)) {
    try {
      std::size_t pos = 0;
      const std::string str(s);
      const std::uint64_t v = std::stoull(str, &pos, 0);
      if (pos == str.size()) return v;
    } catch (...) {
    }
  }
  return fallback;
}

}  // namespace vertexlab
