#ifndef SWJD_RNG_HPP
#define SWJD_RNG_HPP

// Counter-based random streams for reproducible parallel Monte Carlo.
//
// Every draw is a pure function of (master seed, stream domain, path index,
// channel, draw counter), so any scheduler may hand path indices to any
// worker and the sampled numbers never change. The block cipher is
// Philox4x32-10 (Salmon et al., SC'11) with the published round constants.

#include <array>
#include <cmath>
#include <cstdint>

namespace swjd {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
                         std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint32_t k0, std::uint32_t k1) {
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k0, k1);
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return ctr;
}

// SplitMix64 finalizer, used to spread seed/domain bits into Philox keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Independent logical channels inside one path stream. Keeping diffusion,
// jump and switching draws on separate counters lets tests couple paths
// across model variants (e.g. same Brownian increments with and without a
// jump kernel).
enum class RngChannel : std::uint32_t {
  kDiffusion = 1,
  kJump = 2,
  kSwitch = 3,
  kMisc = 4,
};

// Derives the Philox key for one estimator invocation. `domain` separates
// independent uses of the same master seed (different estimators, different
// lattice nodes, ...); equal (seed, domain) pairs share paths.
inline std::uint64_t substream_key(std::uint64_t master_seed, std::uint64_t domain) {
  return detail::mix64(master_seed ^ detail::mix64(domain));
}

// One channel of one path's random stream.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t path_index, RngChannel channel)
      : key_lo_(static_cast<std::uint32_t>(key)),
        key_hi_(static_cast<std::uint32_t>(key >> 32)),
        path_lo_(static_cast<std::uint32_t>(path_index)),
        path_hi_(static_cast<std::uint32_t>(path_index >> 32) ^
                 (static_cast<std::uint32_t>(channel) << 24)) {}

  std::uint64_t next_u64() {
    if (buffer_pos_ == 0) {
      const auto block = detail::philox4x32(
          {static_cast<std::uint32_t>(counter_),
           static_cast<std::uint32_t>(counter_ >> 32), path_lo_, path_hi_},
          key_lo_, key_hi_);
      ++counter_;
      buffer_[0] = (static_cast<std::uint64_t>(block[0]) << 32) | block[1];
      buffer_[1] = (static_cast<std::uint64_t>(block[2]) << 32) | block[3];
      buffer_pos_ = 2;
    }
    return buffer_[--buffer_pos_];
  }

  // Uniform on (0,1); never returns 0 or 1 exactly.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are generated together and the
  // second one is cached, so draw order is well defined.
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint32_t key_lo_;
  std::uint32_t key_hi_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffer_pos_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Bundle of the four channels a path consumes.
struct PathRng {
  CounterRng diffusion;
  CounterRng jump;
  CounterRng regime;
  CounterRng misc;

  PathRng(std::uint64_t key, std::uint64_t path_index)
      : diffusion(key, path_index, RngChannel::kDiffusion),
        jump(key, path_index, RngChannel::kJump),
        regime(key, path_index, RngChannel::kSwitch),
        misc(key, path_index, RngChannel::kMisc) {}
};

}  // namespace swjd

#endif  // SWJD_RNG_HPP
