#include <doctest.h>

#include <cmath>
#include <complex>

#include "phasedecoder/fft.hpp"
#include "phasedecoder/field.hpp"
#include "phasedecoder/rng.hpp"

using namespace dpd;

namespace {

Grid2D grid_of(int n, double pixel = 1.0) { return Grid2D(n, n, pixel, 0.5); }

ComplexField random_field(const Grid2D& g, Rng& rng) {
  ComplexField f(g);
  for (auto& v : f.values) v = Complex(rng.gaussian(), rng.gaussian());
  return f;
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("grid validation") {
  CHECK_NOTHROW(Grid2D(4, 4, 1.0, 0.5));
  CHECK_THROWS_AS(Grid2D(1, 4, 1.0, 0.5), std::invalid_argument);   // too small
  CHECK_THROWS_AS(Grid2D(5, 4, 1.0, 0.5), std::invalid_argument);   // odd
  CHECK_THROWS_AS(Grid2D(4, 4, 0.0, 0.5), std::invalid_argument);   // pixel size
  CHECK_THROWS_AS(Grid2D(4, 4, 1.0, -1.0), std::invalid_argument);  // wavelength
}

TEST_CASE("frequency coordinates follow DFT ordering") {
  const auto [fx, fy] = frequency_coordinates(grid_of(4));
  CHECK(fx[0] == doctest::Approx(0.0));
  CHECK(fx[1] == doctest::Approx(0.25));
  CHECK(fx[2] == doctest::Approx(-0.5));
  CHECK(fx[3] == doctest::Approx(-0.25));

  const Grid2D big(512, 512, 0.25, 0.5);
  const auto [bfx, bfy] = frequency_coordinates(big);
  double max_abs = 0.0;
  for (double f : bfx) max_abs = std::max(max_abs, std::abs(f));
  CHECK(max_abs == doctest::Approx(big.nyquist()));  // 1/(2p)

  const Grid2D fine(16, 16, 0.5, 0.5);
  const auto [ffx, ffy] = frequency_coordinates(fine);
  CHECK(ffx[1] - ffx[0] == doctest::Approx(0.125));  // 1/(N p)
}

TEST_CASE("unitary fft of a delta is flat") {
  ComplexField f(grid_of(4));
  f.at(0, 0) = 1.0;
  const ComplexField F = fft2_unitary(f);
  for (const auto& v : F.values) {
    CHECK(v.real() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(v.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("fft round trip and Parseval on grids from 4 to 512") {
  Rng rng(7);
  for (int n : {4, 16, 64, 512}) {
    const ComplexField f = random_field(grid_of(n), rng);
    const ComplexField F = fft2_unitary(f);
    const ComplexField back = ifft2_unitary(F);
    double err = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      err += std::norm(back.values[i] - f.values[i]);
    }
    CHECK(std::sqrt(err / f.squared_norm()) < 1e-10);
    CHECK(F.squared_norm() == doctest::Approx(f.squared_norm()).epsilon(1e-10));
  }
}

TEST_CASE("on-grid plane wave concentrates in a single bin") {
  const Grid2D g = grid_of(16);
  const auto [fx, fy] = frequency_coordinates(g);
  const int bx = 3, by = 11;
  ComplexField f(g);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const double arg = 2.0 * M_PI * (fx[bx] * x + fy[by] * y) * g.pixel_size;
      f.at(y, x) = std::polar(1.0, arg);
    }
  }
  const ComplexField F = fft2_unitary(f);
  const double total = F.squared_norm();
  CHECK(std::norm(F.at(by, bx)) == doctest::Approx(total).epsilon(1e-10));
}

TEST_CASE("stack validation") {
  const Grid2D g = grid_of(4);
  FocusStack stack;
  stack.grid = g;
  CHECK_THROWS_AS(stack.validate(), std::invalid_argument);  // empty
  stack.amplitudes.emplace_back(g, 1.0);
  CHECK_NOTHROW(stack.validate());
  stack.amplitudes.emplace_back(g, -0.5);
  CHECK_THROWS_AS(stack.validate(), std::invalid_argument);  // negative
}

}  // TEST_SUITE
