#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mstp {

// Stable 64-bit FNV-1a; used for seed derivation and schema digests, so the
// value must never depend on the platform's std::hash.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Mixes a base seed with a clip id, a step index and a salt into an
// independent stream seed. Oracle backends key every draw this way so that
// results are a pure function of (seed, clip, step, salt).
std::uint64_t derive_seed(std::uint64_t base, std::string_view clip_id, std::int64_t step,
                          std::uint64_t salt) noexcept;

/// Portable random stream: mt19937_64 for raw bits, with the conversions done
/// here rather than by <random> distributions (whose output differs between
/// standard library vendors).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace mstp
