#include "phasedecoder/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>

namespace dpd {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// FFTW planning is not thread-safe; new-array execution is. Plans are made
// once per shape with FFTW_UNALIGNED so they accept any buffer.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(int height, int width) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(height) << 32) | static_cast<std::uint32_t>(width);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    ComplexVec probe(static_cast<std::size_t>(height) * width);
    auto* buf = reinterpret_cast<fftw_complex*>(probe.data());
    PlanPair pair;
    pair.forward = fftw_plan_dft_2d(height, width, buf, buf, FFTW_FORWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    pair.backward = fftw_plan_dft_2d(height, width, buf, buf, FFTW_BACKWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, pair);
    return pair;
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::uint64_t, PlanPair> plans_;
};

}  // namespace

void unitary_dft_2d(int height, int width, const Complex* in, Complex* out, bool inverse) {
  PlanPair plans = PlanCache::instance().get(height, width);
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in));
  auto* dst = reinterpret_cast<fftw_complex*>(out);
  fftw_execute_dft(inverse ? plans.backward : plans.forward, src, dst);

  const double scale = 1.0 / std::sqrt(static_cast<double>(height) * width);
  const std::size_t n = static_cast<std::size_t>(height) * width;
  for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

ComplexField fft2_unitary(const ComplexField& field) {
  ComplexField result(field.grid);
  unitary_dft_2d(field.grid.height, field.grid.width, field.values.data(), result.values.data(),
                 false);
  return result;
}

ComplexField ifft2_unitary(const ComplexField& field) {
  ComplexField result(field.grid);
  unitary_dft_2d(field.grid.height, field.grid.width, field.values.data(), result.values.data(),
                 true);
  return result;
}

}  // namespace dpd
