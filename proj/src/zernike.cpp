#include "phasedecoder/zernike.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace dpd {

namespace {

constexpr int kMaxNoll = 55;  // radial degree 9

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Radial polynomial R_n^|m|(rho).
double zernike_radial(int n, int m_abs, double rho) {
  double value = 0.0;
  for (int s = 0; s <= (n - m_abs) / 2; ++s) {
    const double coeff = ((s % 2 == 0) ? 1.0 : -1.0) * factorial(n - s) /
                         (factorial(s) * factorial((n + m_abs) / 2 - s) *
                          factorial((n - m_abs) / 2 - s));
    value += coeff * std::pow(rho, n - 2 * s);
  }
  return value;
}

}  // namespace

PupilGeometry::PupilGeometry(const Grid2D& grid_, double na_)
    : grid(grid_), na(na_), cutoff(na_ / grid_.wavelength) {
  if (!(na > 0.0) || na >= 1.5) {
    throw std::invalid_argument("PupilGeometry: na must lie in (0, 1.5)");
  }
  if (!(cutoff < grid.nyquist())) {
    throw std::invalid_argument("PupilGeometry: pupil cutoff must stay below Nyquist");
  }
}

std::pair<int, int> noll_to_nm(int noll_index) {
  if (noll_index < 1) throw std::invalid_argument("noll_to_nm: index starts at 1");
  int n = 0;
  int j = noll_index - 1;
  while (j > n) {
    ++n;
    j -= n;
  }
  int m = (n % 2) + 2 * ((j + ((n + 1) % 2)) / 2);
  if (noll_index % 2 != 0) m = -m;
  return {n, m};
}

Pupil make_circ_pupil(const PupilGeometry& geometry) {
  Pupil pupil(geometry);
  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  const double cutoff2 = geometry.cutoff * geometry.cutoff;
  std::size_t idx = 0;
  for (int y = 0; y < geometry.grid.height; ++y) {
    for (int x = 0; x < geometry.grid.width; ++x, ++idx) {
      const double r2 = fx[x] * fx[x] + fy[y] * fy[y];
      pupil.values[idx] = (r2 <= cutoff2) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
    }
  }
  return pupil;
}

ZernikeBasis make_zernike_basis(const PupilGeometry& geometry, int mode_count) {
  if (mode_count < 1) throw std::invalid_argument("make_zernike_basis: mode_count must be >= 1");
  if (mode_count + 1 > kMaxNoll) {
    throw std::invalid_argument("make_zernike_basis: unsupported mode (Noll index beyond 55)");
  }

  ZernikeBasis basis;
  basis.geometry = geometry;
  basis.mode_count = mode_count;

  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  const int pixels = geometry.grid.pixel_count();
  const double cutoff2 = geometry.cutoff * geometry.cutoff;

  RealVec rho(static_cast<std::size_t>(pixels), 0.0);
  RealVec theta(static_cast<std::size_t>(pixels), 0.0);
  std::size_t idx = 0;
  for (int y = 0; y < geometry.grid.height; ++y) {
    for (int x = 0; x < geometry.grid.width; ++x, ++idx) {
      const double r2 = fx[x] * fx[x] + fy[y] * fy[y];
      if (r2 <= cutoff2) {
        basis.disk_indices.push_back(static_cast<int>(idx));
        rho[idx] = std::sqrt(r2) / geometry.cutoff;
        theta[idx] = std::atan2(fy[y], fx[x]);
      }
    }
  }

  basis.modes.reserve(static_cast<std::size_t>(mode_count));
  for (int mode = 0; mode < mode_count; ++mode) {
    const auto [n, m] = noll_to_nm(mode + 2);  // piston (Noll 1) excluded
    const int m_abs = std::abs(m);
    // Noll normalization: unit RMS over the unit disk.
    const double norm = (m == 0) ? std::sqrt(n + 1.0) : std::sqrt(2.0 * (n + 1.0));
    RealVec values(static_cast<std::size_t>(pixels), 0.0);
    for (int i : basis.disk_indices) {
      const double radial = zernike_radial(n, m_abs, rho[i]);
      double angular = 1.0;
      if (m > 0) {
        angular = std::cos(m_abs * theta[i]);
      } else if (m < 0) {
        angular = std::sin(m_abs * theta[i]);
      }
      values[i] = norm * radial * angular;
    }
    basis.modes.push_back(std::move(values));
  }
  return basis;
}

Pupil synthesize_pupil(const ZernikeBasis& basis, std::span<const double> coeffs) {
  if (static_cast<int>(coeffs.size()) != basis.mode_count) {
    throw std::invalid_argument("synthesize_pupil: coefficient count does not match basis");
  }
  Pupil pupil(basis.geometry);
  for (int i : basis.disk_indices) {
    double phase = 0.0;
    for (int m = 0; m < basis.mode_count; ++m) phase += coeffs[m] * basis.modes[m][i];
    pupil.values[i] = std::polar(1.0, phase);
  }
  return pupil;
}

Pupil defocus_pupil(const PupilGeometry& geometry, double z_um) {
  Pupil pupil(geometry);
  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  const double lambda = geometry.grid.wavelength;
  const double k0 = 2.0 * M_PI / lambda;
  const double cutoff2 = geometry.cutoff * geometry.cutoff;
  std::size_t idx = 0;
  for (int y = 0; y < geometry.grid.height; ++y) {
    for (int x = 0; x < geometry.grid.width; ++x, ++idx) {
      const double r2 = fx[x] * fx[x] + fy[y] * fy[y];
      if (r2 <= cutoff2) {
        // 1 - lambda^2 r2 >= 1 - na^2 > 0 inside the disk.
        const double phase = k0 * z_um * std::sqrt(1.0 - lambda * lambda * r2);
        pupil.values[idx] = std::polar(1.0, phase);
      }
    }
  }
  return pupil;
}

RealVec defocus_phase(const PupilGeometry& geometry, double z_um) {
  RealVec out(static_cast<std::size_t>(geometry.grid.pixel_count()), 0.0);
  const auto [fx, fy] = frequency_coordinates(geometry.grid);
  const double lambda = geometry.grid.wavelength;
  const double k0 = 2.0 * M_PI / lambda;
  const double cutoff2 = geometry.cutoff * geometry.cutoff;
  std::size_t idx = 0;
  for (int y = 0; y < geometry.grid.height; ++y) {
    for (int x = 0; x < geometry.grid.width; ++x, ++idx) {
      const double r2 = fx[x] * fx[x] + fy[y] * fy[y];
      if (r2 <= cutoff2) {
        out[idx] = k0 * z_um * std::sqrt(1.0 - lambda * lambda * r2);
      }
    }
  }
  return out;
}

std::vector<double> project_onto_basis(const ZernikeBasis& basis, const RealVec& phase) {
  if (phase.size() != static_cast<std::size_t>(basis.geometry.grid.pixel_count())) {
    throw std::invalid_argument("project_onto_basis: phase map does not match grid");
  }
  const int m_count = basis.mode_count;
  const auto disk_size = static_cast<Eigen::Index>(basis.disk_indices.size());
  Eigen::MatrixXd design(disk_size, m_count);
  Eigen::VectorXd rhs(disk_size);
  for (Eigen::Index row = 0; row < disk_size; ++row) {
    const int i = basis.disk_indices[static_cast<std::size_t>(row)];
    rhs(row) = phase[i];
    for (int m = 0; m < m_count; ++m) design(row, m) = basis.modes[m][i];
  }
  const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
  return {sol.data(), sol.data() + sol.size()};
}

RealVec pupil_phase(const Pupil& pupil) {
  RealVec out(pupil.values.size(), 0.0);
  for (std::size_t i = 0; i < pupil.values.size(); ++i) {
    if (std::norm(pupil.values[i]) > 0.0) out[i] = std::arg(pupil.values[i]);
  }
  return out;
}

}  // namespace dpd
