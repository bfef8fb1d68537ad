#ifndef PHASEDECODER_RNG_HPP
#define PHASEDECODER_RNG_HPP

#include <cstdint>
#include <random>

namespace dpd {

// Deterministic random source. Draws are derived from the raw mt19937_64
// stream with fixed arithmetic (no std:: distributions), so a seed pins the
// exact sequence independent of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; one spare draw is cached.
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Poisson sample; exact multiplication method for small means, normal
  /// approximation (rounded, clamped at zero) for large ones.
  long poisson(double mean);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpd

#endif
