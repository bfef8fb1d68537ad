#ifndef PHASEDECODER_SIM_HPP
#define PHASEDECODER_SIM_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "phasedecoder/field.hpp"
#include "phasedecoder/forward.hpp"
#include "phasedecoder/zernike.hpp"

namespace dpd {

enum class TargetKind { Flat, DiskArray, BarGroups, SiemensStar, CustomFromFile };

struct TargetSpec {
  TargetKind kind = TargetKind::DiskArray;
  double contrast = 0.95;   // radians
  int feature_scale = 16;   // pixels
  std::filesystem::path custom_path;  // CustomFromFile only

  void validate() const;
};

enum class NoiseModel { None, GaussianOnIntensity, Poisson };

struct NoiseSpec {
  NoiseModel model = NoiseModel::None;
  double parameter = 0.0;   // stddev fraction of mean intensity, or photons per unit intensity
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct MetricsReport {
  double rmse_offset_free = 0.0;      // radians, global offset quotiented
  double psnr_db = 0.0;               // over the 2*pi range
  std::vector<double> zernike_error;  // per-capture coefficient residual norms
  double loss_final = 0.0;
};

/// Deterministic synthetic phase targets. Binary kinds take values in
/// {0, contrast} exactly.
RealImage make_target(const TargetSpec& spec, const Grid2D& grid);

struct SimulatedDataset {
  FocusStack stack;
  MeasurementModel model;         // ground-truth defocus pupils
  std::vector<double> defocus_um;
};

/// Through-focus stack from the angular-spectrum defocus kernel. Noise acts
/// on intensity (amplitude squared), is floored at zero, then re-rooted.
SimulatedDataset simulate_stack(const RealImage& phase, const PupilGeometry& geometry,
                                const std::vector<double>& defocus_um, const NoiseSpec& noise);

/// Offset-free circular phase error and PSNR. zernike_error and loss_final
/// are left empty; callers with ground truth fill them in.
MetricsReport compare_phase(const RealImage& reconstructed, const RealImage& truth);

/// min over delta of RMS(wrap(a - b - delta)).
double offset_free_rmse(const RealImage& a, const RealImage& b);

}  // namespace dpd

#endif
