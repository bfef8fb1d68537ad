#include "phasedecoder/rng.hpp"

#include <cmath>

namespace dpd {

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

long Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    double product = uniform01();
    long count = 0;
    while (product > limit) {
      product *= uniform01();
      ++count;
    }
    return count;
  }
  const double sample = std::round(mean + std::sqrt(mean) * gaussian());
  return sample < 0.0 ? 0 : static_cast<long>(sample);
}

}  // namespace dpd
