#include "phasedecoder/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "phasedecoder/config.hpp"
#include "phasedecoder/io.hpp"

namespace dpd {

namespace {

using nlohmann::json;

std::string amp_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "amp_%03zu.pfm", index);
  return buf;
}

}  // namespace

MeasurementModel Dataset::ground_truth_model() const {
  if (!has_known_pupils()) {
    throw std::invalid_argument("Dataset: no ground-truth pupils available");
  }
  MeasurementModel model;
  model.geometry = geometry;
  for (double z : defocus_um) model.pupils.push_back(defocus_pupil(geometry, z));
  return model;
}

void write_dataset(const std::filesystem::path& dir, const SimulatedDataset& simulated,
                   const NoiseSpec& noise, const RealImage& truth_phase,
                   const ZernikeBasis* truth_basis) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("write_dataset: cannot create " + dir.string());

  const Grid2D& grid = simulated.stack.grid;
  json meta;
  meta["grid"] = {{"width", grid.width},
                  {"height", grid.height},
                  {"pixel_size_um", grid.pixel_size},
                  {"wavelength_um", grid.wavelength}};
  meta["na"] = simulated.model.geometry.na;
  meta["defocus_um"] = simulated.defocus_um;
  meta["noise"] = {{"model", noise_model_name(noise.model)},
                   {"parameter", noise.parameter},
                   {"rng_seed", noise.rng_seed}};
  meta["labels"] = simulated.stack.labels;
  write_text_file(dir / "stack.json", meta.dump(2) + "\n");

  for (std::size_t n = 0; n < simulated.stack.size(); ++n) {
    write_pfm(dir / amp_filename(n), simulated.stack.amplitudes[n]);
  }
  write_pfm(dir / "truth_phase.pfm", truth_phase);

  if (truth_basis != nullptr) {
    Eigen::MatrixXd truth(static_cast<Eigen::Index>(simulated.defocus_um.size()),
                          truth_basis->mode_count);
    for (std::size_t n = 0; n < simulated.defocus_um.size(); ++n) {
      const RealVec phase = defocus_phase(simulated.model.geometry, simulated.defocus_um[n]);
      const std::vector<double> coeffs = project_onto_basis(*truth_basis, phase);
      for (int m = 0; m < truth_basis->mode_count; ++m) {
        truth(static_cast<Eigen::Index>(n), m) = coeffs[static_cast<std::size_t>(m)];
      }
    }
    write_zernike_csv(dir / "truth_zernike.csv", truth);
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path meta_path = dir / "stack.json";
  if (!std::filesystem::exists(meta_path)) {
    throw IoError("load_dataset: missing " + meta_path.string());
  }
  json meta;
  try {
    meta = json::parse(read_text_file(meta_path));
  } catch (const json::exception& e) {
    throw IoError("load_dataset: bad stack.json: " + std::string(e.what()));
  }

  Dataset dataset;
  try {
    const json& g = meta.at("grid");
    dataset.stack.grid = Grid2D(g.at("width").get<int>(), g.at("height").get<int>(),
                                g.at("pixel_size_um").get<double>(),
                                g.at("wavelength_um").get<double>());
    dataset.geometry = PupilGeometry(dataset.stack.grid, meta.at("na").get<double>());
    if (meta.contains("defocus_um")) {
      dataset.defocus_um = meta["defocus_um"].get<std::vector<double>>();
    }
    if (meta.contains("noise")) {
      dataset.noise.model = noise_model_from_name(meta["noise"].at("model").get<std::string>());
      dataset.noise.parameter = meta["noise"].at("parameter").get<double>();
      dataset.noise.rng_seed = meta["noise"].at("rng_seed").get<std::uint64_t>();
    }
    if (meta.contains("labels")) {
      dataset.stack.labels = meta["labels"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw IoError("load_dataset: bad stack.json: " + std::string(e.what()));
  }

  for (std::size_t n = 0;; ++n) {
    const std::filesystem::path amp_path = dir / amp_filename(n);
    if (!std::filesystem::exists(amp_path)) break;
    dataset.stack.amplitudes.push_back(read_pfm(amp_path, dataset.stack.grid));
  }
  if (dataset.stack.amplitudes.empty()) {
    throw IoError("load_dataset: no amplitude images in " + dir.string());
  }
  dataset.stack.validate();
  if (!dataset.defocus_um.empty() &&
      dataset.defocus_um.size() != dataset.stack.amplitudes.size()) {
    throw IoError("load_dataset: defocus list does not match image count");
  }

  const std::filesystem::path truth_path = dir / "truth_phase.pfm";
  if (std::filesystem::exists(truth_path)) {
    dataset.truth_phase = read_pfm(truth_path, dataset.stack.grid);
  }
  const std::filesystem::path zernike_path = dir / "truth_zernike.csv";
  if (std::filesystem::exists(zernike_path)) {
    dataset.truth_zernike = read_zernike_csv(zernike_path);
  }
  return dataset;
}

}  // namespace dpd
