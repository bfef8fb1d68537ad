#include <doctest.h>

#include <cmath>
#include <numeric>

#include "phasedecoder/field.hpp"
#include "phasedecoder/zernike.hpp"

using namespace dpd;

namespace {

// Paper optics: NA 0.65 objective at 0.514 um.
PupilGeometry paper_geometry(int n, double pixel) {
  return PupilGeometry(Grid2D(n, n, pixel, 0.514), 0.65);
}

double disk_inner_product(const ZernikeBasis& basis, const RealVec& a, const RealVec& b) {
  double acc = 0.0;
  for (int i : basis.disk_indices) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_SUITE("zernike") {

TEST_CASE("noll index table") {
  CHECK(noll_to_nm(1) == std::pair<int, int>{0, 0});    // piston
  CHECK(noll_to_nm(2) == std::pair<int, int>{1, 1});    // tip
  CHECK(noll_to_nm(3) == std::pair<int, int>{1, -1});   // tilt
  CHECK(noll_to_nm(4) == std::pair<int, int>{2, 0});    // defocus
  CHECK(noll_to_nm(5) == std::pair<int, int>{2, -2});
  CHECK(noll_to_nm(6) == std::pair<int, int>{2, 2});
  CHECK(noll_to_nm(7) == std::pair<int, int>{3, -1});
  CHECK(noll_to_nm(11) == std::pair<int, int>{4, 0});   // primary spherical
}

TEST_CASE("geometry invariants") {
  CHECK(paper_geometry(128, 0.1625).cutoff == doctest::Approx(0.65 / 0.514));  // ~1.2646
  // Cutoff at or above Nyquist is rejected: 1/(2*0.4) = 1.25 < 1.2646.
  CHECK_THROWS_AS(paper_geometry(128, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(PupilGeometry(Grid2D(64, 64, 0.1, 0.5), 1.6), std::invalid_argument);
}

TEST_CASE("circ pupil area matches the analytic disk") {
  const PupilGeometry geometry = paper_geometry(512, 0.1625);
  const Pupil pupil = make_circ_pupil(geometry);
  double count = 0.0;
  for (const auto& v : pupil.values) count += v.real();
  const double fraction = count / geometry.grid.pixel_count();
  const double expected =
      M_PI * std::pow(geometry.cutoff / geometry.grid.nyquist(), 2) / 4.0;
  CHECK(fraction == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("tip mode is odd in fx, defocus mode is radial") {
  const PupilGeometry geometry = paper_geometry(128, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 9);
  REQUIRE(basis.mode_count == 9);

  const RealVec& tip = basis.modes[0];  // Noll 2
  const int n = geometry.grid.width;
  for (int y = 0; y < n; ++y) {
    for (int x = 1; x < n / 2; ++x) {  // (fx, fy) vs (-fx, fy)
      CHECK(tip[static_cast<std::size_t>(y) * n + x] +
                tip[static_cast<std::size_t>(y) * n + (n - x)] ==
            doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  const RealVec& defocus = basis.modes[2];  // Noll 4
  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  // Equal radius, different direction: (f, 0) and (0, f).
  for (int i = 1; i < n / 2; ++i) {
    CHECK(defocus[static_cast<std::size_t>(i)] ==
          doctest::Approx(defocus[static_cast<std::size_t>(i) * n]).epsilon(1e-12));
  }
}

TEST_CASE("modes are near-orthogonal on a 256 grid") {
  const PupilGeometry geometry = paper_geometry(256, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 9);
  for (int i = 0; i < basis.mode_count; ++i) {
    const double ni = std::sqrt(disk_inner_product(basis, basis.modes[i], basis.modes[i]));
    for (int j = i + 1; j < basis.mode_count; ++j) {
      const double nj = std::sqrt(disk_inner_product(basis, basis.modes[j], basis.modes[j]));
      const double cross = disk_inner_product(basis, basis.modes[i], basis.modes[j]);
      CHECK(std::abs(cross) / (ni * nj) < 1e-2);
    }
  }
}

TEST_CASE("modes vanish outside the disk") {
  const PupilGeometry geometry = paper_geometry(64, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 12);
  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  const double c2 = geometry.cutoff * geometry.cutoff;
  for (const RealVec& mode : basis.modes) {
    std::size_t idx = 0;
    for (int y = 0; y < geometry.grid.height; ++y) {
      for (int x = 0; x < geometry.grid.width; ++x, ++idx) {
        if (fx[x] * fx[x] + fy[y] * fy[y] > c2) CHECK(mode[idx] == 0.0);
      }
    }
  }
}

TEST_CASE("mode count limits") {
  const PupilGeometry geometry = paper_geometry(64, 0.1625);
  CHECK_NOTHROW(make_zernike_basis(geometry, 15));
  CHECK_THROWS_AS(make_zernike_basis(geometry, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_zernike_basis(geometry, 60), std::invalid_argument);
}

TEST_CASE("synthesize_pupil: zero coefficients reproduce circ") {
  const PupilGeometry geometry = paper_geometry(64, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 9);
  const std::vector<double> zeros(9, 0.0);
  const Pupil pupil = synthesize_pupil(basis, zeros);
  const Pupil circ = make_circ_pupil(geometry);
  for (std::size_t i = 0; i < pupil.values.size(); ++i) {
    CHECK(std::abs(pupil.values[i] - circ.values[i]) < 1e-14);
  }

  const std::vector<double> wrong_length(5, 0.0);
  CHECK_THROWS_AS(synthesize_pupil(basis, wrong_length), std::invalid_argument);
}

TEST_CASE("synthesized pupils are unit-modulus on the disk, zero outside") {
  const PupilGeometry geometry = paper_geometry(64, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 9);
  std::vector<double> coeffs = {0.3, -0.7, 1.2, 0.1, -0.2, 0.5, 0.05, -0.4, 0.9};
  const Pupil pupil = synthesize_pupil(basis, coeffs);
  const Pupil circ = make_circ_pupil(geometry);
  for (std::size_t i = 0; i < pupil.values.size(); ++i) {
    CHECK(std::abs(std::abs(pupil.values[i]) - circ.values[i].real()) < 1e-12);
  }
}

TEST_CASE("phase scales linearly below the wrap") {
  const PupilGeometry geometry = paper_geometry(64, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 6);
  std::vector<double> coeffs = {0.02, -0.03, 0.05, 0.01, -0.02, 0.03};
  const Pupil one = synthesize_pupil(basis, coeffs);
  for (auto& c : coeffs) c *= 7.0;
  const Pupil seven = synthesize_pupil(basis, coeffs);
  for (int i : basis.disk_indices) {
    CHECK(std::arg(seven.values[i]) ==
          doctest::Approx(7.0 * std::arg(one.values[i])).epsilon(1e-9));
  }
}

TEST_CASE("defocus pupil basics") {
  const PupilGeometry geometry = paper_geometry(64, 0.1625);
  const Pupil at_zero = defocus_pupil(geometry, 0.0);
  const Pupil circ = make_circ_pupil(geometry);
  for (std::size_t i = 0; i < circ.values.size(); ++i) {
    CHECK(std::abs(at_zero.values[i] - circ.values[i]) < 1e-14);
  }

  const Pupil plus = defocus_pupil(geometry, 2.5);
  const Pupil minus = defocus_pupil(geometry, -2.5);
  for (std::size_t i = 0; i < plus.values.size(); ++i) {
    CHECK(std::abs(plus.values[i] - std::conj(minus.values[i])) < 1e-12);
  }
}

TEST_CASE("small defocus matches the quadratic approximation") {
  const PupilGeometry geometry = paper_geometry(128, 0.1625);
  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  const double z = 1.0;
  const Pupil pupil = defocus_pupil(geometry, z);
  const double lambda = geometry.grid.wavelength;
  // Compare against exp(j*(2*pi*z/lambda - pi*lambda*z*f^2)); the constant
  // offset is the on-axis term of the expansion.
  double max_err = 0.0;
  std::size_t idx = 0;
  for (int y = 0; y < geometry.grid.height; ++y) {
    for (int x = 0; x < geometry.grid.width; ++x, ++idx) {
      if (std::norm(pupil.values[idx]) == 0.0) continue;
      const double f2 = fx[x] * fx[x] + fy[y] * fy[y];
      const double quad = 2.0 * M_PI * z / lambda - M_PI * lambda * z * f2;
      const double err = std::abs(std::arg(pupil.values[idx] * std::polar(1.0, -quad)));
      max_err = std::max(max_err, err);
    }
  }
  CHECK(max_err < 0.05);
}

TEST_CASE("defocus projects mainly onto the Noll-4 mode") {
  const PupilGeometry geometry = paper_geometry(128, 0.1625);
  const ZernikeBasis basis = make_zernike_basis(geometry, 9);
  const RealVec phase = defocus_phase(geometry, 4.0);
  const std::vector<double> coeffs = project_onto_basis(basis, phase);
  std::size_t argmax = 0;
  for (std::size_t m = 1; m < coeffs.size(); ++m) {
    if (std::abs(coeffs[m]) > std::abs(coeffs[argmax])) argmax = m;
  }
  CHECK(argmax == 2);  // Noll 4 sits at index 2 of the piston-free basis
}

}  // TEST_SUITE
