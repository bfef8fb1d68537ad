#include "phasedecoder/field.hpp"

#include <cmath>
#include <stdexcept>

namespace dpd {

Grid2D::Grid2D(int width_, int height_, double pixel_size_, double wavelength_)
    : width(width_), height(height_), pixel_size(pixel_size_), wavelength(wavelength_) {
  if (width < 2 || height < 2) {
    throw std::invalid_argument("Grid2D: width and height must be >= 2");
  }
  if (width % 2 != 0 || height % 2 != 0) {
    throw std::invalid_argument("Grid2D: width and height must be even");
  }
  if (!(pixel_size > 0.0)) {
    throw std::invalid_argument("Grid2D: pixel_size must be positive");
  }
  if (!(wavelength > 0.0)) {
    throw std::invalid_argument("Grid2D: wavelength must be positive");
  }
}

double ComplexField::squared_norm() const {
  double acc = 0.0;
  for (const Complex& v : values) acc += std::norm(v);
  return acc;
}

void ComplexField::validate() const {
  if (values.size() != static_cast<std::size_t>(grid.pixel_count())) {
    throw std::invalid_argument("ComplexField: value count does not match grid");
  }
  for (const Complex& v : values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::invalid_argument("ComplexField: non-finite entry");
    }
  }
}

double RealImage::squared_norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return acc;
}

void RealImage::validate() const {
  if (values.size() != static_cast<std::size_t>(grid.pixel_count())) {
    throw std::invalid_argument("RealImage: value count does not match grid");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("RealImage: non-finite entry");
  }
}

double FocusStack::squared_norm() const {
  double acc = 0.0;
  for (const RealImage& a : amplitudes) acc += a.squared_norm();
  return acc;
}

void FocusStack::validate() const {
  if (amplitudes.empty()) throw std::invalid_argument("FocusStack: needs at least one image");
  for (const RealImage& a : amplitudes) {
    if (!(a.grid == grid)) throw std::invalid_argument("FocusStack: mixed grids");
    a.validate();
    for (double v : a.values) {
      if (v < 0.0) throw std::invalid_argument("FocusStack: negative amplitude");
    }
  }
  if (!labels.empty() && labels.size() != amplitudes.size()) {
    throw std::invalid_argument("FocusStack: label count does not match image count");
  }
}

std::pair<RealVec, RealVec> frequency_coordinates(const Grid2D& grid) {
  RealVec fx(static_cast<std::size_t>(grid.width));
  RealVec fy(static_cast<std::size_t>(grid.height));
  const double dx = 1.0 / (grid.width * grid.pixel_size);
  const double dy = 1.0 / (grid.height * grid.pixel_size);
  for (int i = 0; i < grid.width; ++i) {
    fx[i] = (i < grid.width / 2 ? i : i - grid.width) * dx;
  }
  for (int i = 0; i < grid.height; ++i) {
    fy[i] = (i < grid.height / 2 ? i : i - grid.height) * dy;
  }
  return {std::move(fx), std::move(fy)};
}

}  // namespace dpd
