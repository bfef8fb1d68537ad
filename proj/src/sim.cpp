#include "phasedecoder/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phasedecoder/io.hpp"
#include "phasedecoder/rng.hpp"

namespace dpd {

namespace {

double wrap_pi(double x) {
  x = std::fmod(x + M_PI, 2.0 * M_PI);
  if (x < 0.0) x += 2.0 * M_PI;
  return x - M_PI;
}

void fill_disk_array(RealImage& image, double contrast, int feature) {
  const int pitch = 2 * feature;
  const double radius = feature / 2.0;
  for (int y = 0; y < image.grid.height; ++y) {
    const double cy = (y % pitch) - pitch / 2.0 + 0.5;
    for (int x = 0; x < image.grid.width; ++x) {
      const double cx = (x % pitch) - pitch / 2.0 + 0.5;
      image.at(y, x) = (cx * cx + cy * cy <= radius * radius) ? contrast : 0.0;
    }
  }
}

// Horizontal three-bar groups at widths f, 2f, 3f, ... separated by equal
// gaps; the smallest on-run along a column equals feature_scale.
void fill_bar_groups(RealImage& image, double contrast, int feature) {
  int y = feature;
  int width_px = feature;
  while (y + 5 * width_px < image.grid.height) {
    for (int bar = 0; bar < 3; ++bar) {
      for (int row = 0; row < width_px && y < image.grid.height; ++row, ++y) {
        for (int x = feature; x < image.grid.width - feature; ++x) {
          image.at(y, x) = contrast;
        }
      }
      y += width_px;  // gap of one bar width
    }
    y += width_px;
    width_px += feature;
  }
}

void fill_siemens_star(RealImage& image, double contrast, int feature) {
  const double cx = image.grid.width / 2.0 - 0.5;
  const double cy = image.grid.height / 2.0 - 0.5;
  const double outer = 0.45 * std::min(image.grid.width, image.grid.height);
  // Spoke count chosen so the arc width at the rim is feature_scale pixels.
  int spokes = std::max(4, static_cast<int>(std::round(M_PI * outer / feature)));
  for (int y = 0; y < image.grid.height; ++y) {
    for (int x = 0; x < image.grid.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double r = std::hypot(dx, dy);
      if (r > outer || r < 2.0) continue;
      const double theta = std::atan2(dy, dx) + M_PI;
      const int sector = static_cast<int>(theta / (2.0 * M_PI) * 2 * spokes) % (2 * spokes);
      if (sector % 2 == 0) image.at(y, x) = contrast;
    }
  }
}

}  // namespace

void TargetSpec::validate() const {
  if (!(contrast > 0.0 && contrast < 2.0 * M_PI)) {
    throw std::invalid_argument("TargetSpec: contrast must lie in (0, 2*pi)");
  }
  if (feature_scale < 1) throw std::invalid_argument("TargetSpec: feature_scale must be >= 1");
  if (kind == TargetKind::CustomFromFile && custom_path.empty()) {
    throw std::invalid_argument("TargetSpec: custom target needs a file path");
  }
}

void NoiseSpec::validate() const {
  if (parameter < 0.0) throw std::invalid_argument("NoiseSpec: parameter must be >= 0");
}

RealImage make_target(const TargetSpec& spec, const Grid2D& grid) {
  spec.validate();
  RealImage image(grid);
  switch (spec.kind) {
    case TargetKind::Flat:
      break;
    case TargetKind::DiskArray:
      fill_disk_array(image, spec.contrast, spec.feature_scale);
      break;
    case TargetKind::BarGroups:
      fill_bar_groups(image, spec.contrast, spec.feature_scale);
      break;
    case TargetKind::SiemensStar:
      fill_siemens_star(image, spec.contrast, spec.feature_scale);
      break;
    case TargetKind::CustomFromFile: {
      image = read_pfm(spec.custom_path, grid);
      break;
    }
  }
  return image;
}

SimulatedDataset simulate_stack(const RealImage& phase, const PupilGeometry& geometry,
                                const std::vector<double>& defocus_um, const NoiseSpec& noise) {
  if (defocus_um.empty()) throw std::invalid_argument("simulate_stack: empty defocus list");
  noise.validate();
  if (!(phase.grid == geometry.grid)) {
    throw std::invalid_argument("simulate_stack: phase and geometry grids differ");
  }

  SimulatedDataset dataset;
  dataset.defocus_um = defocus_um;
  dataset.model.geometry = geometry;
  for (double z : defocus_um) dataset.model.pupils.push_back(defocus_pupil(geometry, z));

  dataset.stack = forward_stack(phase, dataset.model);
  for (std::size_t n = 0; n < dataset.stack.size(); ++n) {
    dataset.stack.labels.push_back("defocus_" + std::to_string(defocus_um[n]) + "um");
  }

  if (noise.model != NoiseModel::None && noise.parameter > 0.0) {
    Rng rng(noise.rng_seed);
    for (RealImage& amp : dataset.stack.amplitudes) {
      double mean_intensity = 0.0;
      for (double a : amp.values) mean_intensity += a * a;
      mean_intensity /= static_cast<double>(amp.values.size());
      for (double& a : amp.values) {
        double intensity = a * a;
        if (noise.model == NoiseModel::GaussianOnIntensity) {
          intensity += noise.parameter * mean_intensity * rng.gaussian();
        } else {  // Poisson with `parameter` photons per unit intensity
          intensity = static_cast<double>(rng.poisson(intensity * noise.parameter)) /
                      noise.parameter;
        }
        a = std::sqrt(std::max(0.0, intensity));
      }
    }
  }
  return dataset;
}

double offset_free_rmse(const RealImage& a, const RealImage& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("offset_free_rmse: grids differ");
  const std::size_t n = a.values.size();
  RealVec diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = wrap_pi(a.values[i] - b.values[i]);

  // The objective sum wrap(d - delta)^2 is piecewise quadratic in delta;
  // scan coarsely, then polish with fixed-point mean removal inside the
  // smooth piece.
  auto rms_at = [&](double delta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = wrap_pi(diff[i] - delta);
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  double best_delta = 0.0;
  double best = rms_at(0.0);
  constexpr int kScanSteps = 256;
  for (int s = 1; s < kScanSteps; ++s) {
    const double delta = -M_PI + (2.0 * M_PI * s) / kScanSteps;
    const double value = rms_at(delta);
    if (value < best) {
      best = value;
      best_delta = delta;
    }
  }
  for (int iter = 0; iter < 100; ++iter) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += wrap_pi(diff[i] - best_delta);
    mean /= static_cast<double>(n);
    best_delta += mean;
    if (std::abs(mean) < 1e-15) break;
  }
  return std::min(best, rms_at(best_delta));
}

MetricsReport compare_phase(const RealImage& reconstructed, const RealImage& truth) {
  MetricsReport report;
  report.rmse_offset_free = offset_free_rmse(reconstructed, truth);
  const double range = 2.0 * M_PI;
  report.psnr_db = (report.rmse_offset_free > 0.0)
                       ? 20.0 * std::log10(range / report.rmse_offset_free)
                       : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace dpd
