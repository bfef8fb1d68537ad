#ifndef PHASEDECODER_ZERNIKE_HPP
#define PHASEDECODER_ZERNIKE_HPP

#include <span>
#include <utility>
#include <vector>

#include "phasedecoder/field.hpp"

namespace dpd {

/// Frequency-plane aperture geometry. The pupil disk has radius NA/wavelength
/// in cycles per micrometer and must fit strictly inside the grid's Nyquist
/// square.
struct PupilGeometry {
  Grid2D grid;
  double na = 0.0;
  double cutoff = 0.0;  // na / wavelength, cycles per micrometer

  PupilGeometry() = default;
  PupilGeometry(const Grid2D& grid, double na);
};

/// Complex pupil on the FFT-ordered frequency grid: unit modulus inside the
/// disk, zero outside.
struct Pupil {
  PupilGeometry geometry;
  ComplexVec values;

  Pupil() = default;
  explicit Pupil(const PupilGeometry& g)
      : geometry(g), values(static_cast<std::size_t>(g.grid.pixel_count())) {}
};

/// Zernike modes sampled on the frequency-grid disk, Noll indices 2..M+1
/// (piston excluded), unit RMS normalization over the unit disk. Modes are
/// zero outside the disk; the phase is only meaningful where the pupil
/// transmits.
struct ZernikeBasis {
  PupilGeometry geometry;
  int mode_count = 0;
  std::vector<RealVec> modes;      // each height*width, FFT-ordered
  std::vector<int> disk_indices;   // linear indices with sqrt(fx^2+fy^2) <= cutoff
};

/// Noll index -> (radial degree n, azimuthal frequency m). Noll 1 is piston.
std::pair<int, int> noll_to_nm(int noll_index);

Pupil make_circ_pupil(const PupilGeometry& geometry);

/// M modes at Noll indices 2..M+1. Throws for M < 1 or beyond the supported
/// radial degree (modes up to Noll 55 are available).
ZernikeBasis make_zernike_basis(const PupilGeometry& geometry, int mode_count);

/// P = circ * exp(j * sum_m coeffs[m] * z_m). Coefficients are radians of
/// wavefront phase.
Pupil synthesize_pupil(const ZernikeBasis& basis, std::span<const double> coeffs);

/// Angular-spectrum defocus by z micrometers:
/// P = circ * exp(j * (2*pi/lambda) * z * sqrt(1 - lambda^2 * (fx^2+fy^2))).
Pupil defocus_pupil(const PupilGeometry& geometry, double z_um);

/// Least-squares projection of an arbitrary pupil-phase map (FFT-ordered,
/// radians, defined inside the disk) onto the basis. Used to express
/// ground-truth defocus in Zernike coordinates.
std::vector<double> project_onto_basis(const ZernikeBasis& basis, const RealVec& phase);

/// Unwrapped angular-spectrum defocus phase map (radians, zero outside the
/// disk). defocus_pupil(g, z) equals circ * exp(j * defocus_phase(g, z)).
RealVec defocus_phase(const PupilGeometry& geometry, double z_um);

/// Phase of `pupil` inside the disk (zero outside), as a real map.
RealVec pupil_phase(const Pupil& pupil);

}  // namespace dpd

#endif
