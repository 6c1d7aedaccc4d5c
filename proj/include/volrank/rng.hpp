#pragma once

// Counter-based random number generation (Philox-4x32-10) with derived,
// non-overlapping logical streams.  Every draw is addressable: the i-th
// variate of stream (seed, id) is a pure function of (seed, id, i), which is
// what makes replays, random access and parallel fills deterministic.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace volrank {

namespace detail {

// 32x32 -> 64 bit multiply, split into hi/lo words.
inline void mulhilo32(std::uint32_t a, std::uint32_t b,
                      std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox4x32_round(
    const std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
    std::uint32_t k1) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo32(kPhiloxM0, ctr[0], hi0, lo0);
  mulhilo32(kPhiloxM1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

// Full 10-round Philox-4x32 block function.
inline std::array<std::uint32_t, 4> philox4x32_10(
    std::array<std::uint32_t, 4> ctr, std::uint32_t k0, std::uint32_t k1) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kPhiloxW0;
      k1 += kPhiloxW1;
    }
    ctr = philox4x32_round(ctr, k0, k1);
  }
  return ctr;
}

// SplitMix64 finalizer; used only for key derivation, never for output.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Derives a 64-bit sub-seed from a master seed and up to two labels.  Chained
// SplitMix64 keeps distinct (seed, a, b) triples on distinct keys, so e.g.
// per-repetition seeds and per-purpose stream ids never collide.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
  std::uint64_t x = detail::splitmix64(seed ^ 0x6A09E667F3BCC909ull);
  x = detail::splitmix64(x ^ detail::splitmix64(a));
  x = detail::splitmix64(x ^ detail::splitmix64(b ^ 0x243F6A8885A308D3ull));
  return x;
}

// One logical iid stream.  Stateless: each call keys Philox with the stream
// key and the requested index, so concurrent readers need no locks.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id) {
    const std::uint64_t k = mix_seed(master_seed, stream_id);
    k0_ = static_cast<std::uint32_t>(k);
    k1_ = static_cast<std::uint32_t>(k >> 32);
  }

  // Raw 128-bit block n, as produced by the underlying generator.
  std::array<std::uint32_t, 4> block(std::uint64_t n) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32), 0u,
        0u};
    return detail::philox4x32_10(ctr, k0_, k1_);
  }

  // i-th U[0,1) variate (53 random bits).
  double uniform_at(std::uint64_t i) const {
    const auto w = block(i);
    const std::uint64_t u =
        (static_cast<std::uint64_t>(w[1]) << 32) | w[0];
    return static_cast<double>(u >> 11) * 0x1.0p-53;
  }

  // i-th N(0,1) variate.  One generator block yields a Box-Muller pair
  // (indices 2m and 2m+1), keeping the stream fully random-access.
  double normal_at(std::uint64_t i) const {
    double z0, z1;
    normal_pair(i >> 1, z0, z1);
    return (i & 1u) ? z1 : z0;
  }

  // Box-Muller pair for block m.
  void normal_pair(std::uint64_t m, double& z0, double& z1) const {
    const auto w = block(m);
    const std::uint64_t a =
        (static_cast<std::uint64_t>(w[1]) << 32) | w[0];
    const std::uint64_t b =
        (static_cast<std::uint64_t>(w[3]) << 32) | w[2];
    // u1 in (0,1] so the logarithm is finite; u2 in [0,1).
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi_v<double> * u2;
    z0 = r * std::cos(t);
    z1 = r * std::sin(t);
  }

 private:
  std::uint32_t k0_, k1_;
};

// Sequential reader over a stream.  Caches the second half of each
// Box-Muller pair so consecutive draws cost one generator block per two
// normals; the cursor makes consumption order explicit at call sites.
class NormalSource {
 public:
  explicit NormalSource(RandomStream stream) : stream_(stream) {}
  NormalSource(std::uint64_t master_seed, std::uint64_t stream_id)
      : stream_(master_seed, stream_id) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double z0;
    stream_.normal_pair(next_block_++, z0, spare_);
    have_spare_ = true;
    return z0;
  }

 private:
  RandomStream stream_;
  std::uint64_t next_block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace volrank
