#pragma once

#include <cmath>
#include <cstdint>

namespace seqstop {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; the 64-bit mixing function used everywhere seeds or
// stream identities are derived.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Stream derivation contract: stream_i = mix64(master + (i+1)*goldenGamma).
// Replication i always sees the same stream no matter how work is scheduled.
inline constexpr std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t i) {
  return mix64(master + (i + 1) * kGoldenGamma);
}

// Counter-based generator (splitmix64): state walks a Weyl sequence, outputs
// are the mixed counter. Copyable value type, no shared state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  static RngStream for_replication(std::uint64_t master_seed, std::uint64_t replication) {
    return RngStream(derive_stream_seed(master_seed, replication));
  }

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on the open interval (0,1).
  double next_u01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_u01() < p; }

  // Standard normal via Marsaglia polar, one spare cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_u01() - 1.0;
      v = 2.0 * next_u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace seqstop
