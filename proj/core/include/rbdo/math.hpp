#pragma once

#include <cstdint>
#include <stdexcept>

namespace rbdo {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF, accurate over the full double range (erfc based).
double norm_cdf(double x);

/// Inverse standard normal CDF for p in (0,1).
/// Rational approximation polished with one Newton step; absolute error
/// well below 1e-9 across the open interval.
double norm_inv_cdf(double p);

/// Deterministic 64-bit random stream. Uniforms are built directly from the
/// high 53 bits of a xoshiro-style generator so sequences are identical
/// across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Uniform in the open interval (0, 1).
  double uniform01();

  /// Standard normal via inverse-CDF of uniform01().
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  std::uint64_t next_u64();

  /// Independent substream for parallel work; deterministic in (seed, idx).
  Rng substream(std::uint64_t idx) const;

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
};

/// FNV-1a over a byte string; used for stable seed/config hashing.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

}  // namespace rbdo
