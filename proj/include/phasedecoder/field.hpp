#ifndef PHASEDECODER_FIELD_HPP
#define PHASEDECODER_FIELD_HPP

#include <complex>
#include <cstddef>
#include <new>
#include <string>
#include <utility>
#include <vector>

namespace dpd {

// 64-byte aligned storage so FFT plans can assume SIMD-friendly buffers.
template <class T, std::size_t Alignment = 64>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Alignment>;
  };

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Alignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(Alignment));
  }

  template <class U>
  bool operator==(const AlignedAllocator<U, Alignment>&) const noexcept {
    return true;
  }
};

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex, AlignedAllocator<Complex>>;
using RealVec = std::vector<double, AlignedAllocator<double>>;

/// Uniform pixel grid at the sample plane. pixel_size is the camera pitch
/// divided by the total magnification; both lengths are in micrometers.
struct Grid2D {
  int width = 0;
  int height = 0;
  double pixel_size = 0.0;
  double wavelength = 0.0;

  Grid2D() = default;
  Grid2D(int width, int height, double pixel_size, double wavelength);

  int pixel_count() const { return width * height; }
  double nyquist() const { return 0.5 / pixel_size; }

  bool operator==(const Grid2D&) const = default;
};

struct ComplexField {
  Grid2D grid;
  ComplexVec values;  // row-major, index = y * width + x

  ComplexField() = default;
  explicit ComplexField(const Grid2D& g, Complex fill = Complex(0.0, 0.0))
      : grid(g), values(static_cast<std::size_t>(g.pixel_count()), fill) {}

  Complex& at(int y, int x) { return values[static_cast<std::size_t>(y) * grid.width + x]; }
  const Complex& at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * grid.width + x];
  }

  double squared_norm() const;
  void validate() const;  // shape + finiteness
};

struct RealImage {
  Grid2D grid;
  RealVec values;  // row-major, index = y * width + x

  RealImage() = default;
  explicit RealImage(const Grid2D& g, double fill = 0.0)
      : grid(g), values(static_cast<std::size_t>(g.pixel_count()), fill) {}

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * grid.width + x]; }
  const double& at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * grid.width + x];
  }

  double squared_norm() const;
  void validate() const;
};

/// Measured amplitude images sqrt(y_n), one per differently-aberrated capture.
struct FocusStack {
  Grid2D grid;
  std::vector<RealImage> amplitudes;
  std::vector<std::string> labels;

  std::size_t size() const { return amplitudes.size(); }
  double squared_norm() const;  // sum over all images
  void validate() const;        // N >= 1, shared grid, entries >= 0 and finite
};

/// FFT-ordered spatial frequencies, cycles per micrometer. DC sits at index 0;
/// fx has length grid.width, fy length grid.height.
std::pair<RealVec, RealVec> frequency_coordinates(const Grid2D& grid);

}  // namespace dpd

#endif
