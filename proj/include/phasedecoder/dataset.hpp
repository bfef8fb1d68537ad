#ifndef PHASEDECODER_DATASET_HPP
#define PHASEDECODER_DATASET_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "phasedecoder/field.hpp"
#include "phasedecoder/sim.hpp"
#include "phasedecoder/zernike.hpp"

namespace dpd {

// On-disk dataset layout:
//   stack.json        grid, NA, defocus list, noise spec, labels
//   amp_000.pfm ...   per-capture amplitude images
//   truth_phase.pfm   optional ground-truth phase
//   truth_zernike.csv optional per-capture basis coefficients
struct Dataset {
  FocusStack stack;
  PupilGeometry geometry;
  std::vector<double> defocus_um;  // empty when pupils are unknown
  NoiseSpec noise;
  std::optional<RealImage> truth_phase;
  std::optional<Eigen::MatrixXd> truth_zernike;

  bool has_known_pupils() const { return !defocus_um.empty(); }
  MeasurementModel ground_truth_model() const;
};

void write_dataset(const std::filesystem::path& dir, const SimulatedDataset& simulated,
                   const NoiseSpec& noise, const RealImage& truth_phase,
                   const ZernikeBasis* truth_basis);

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace dpd

#endif
