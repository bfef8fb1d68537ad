// Command-line driver: simulate synthetic focus stacks, run either
// reconstruction, and compare results against ground truth.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 precondition error,
// 5 solver divergence.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "phasedecoder/config.hpp"
#include "phasedecoder/dataset.hpp"
#include "phasedecoder/io.hpp"
#include "phasedecoder/sim.hpp"
#include "phasedecoder/solvers.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitDivergence = 5;

dpd::RunConfig load_config_or_default(const std::string& config_path) {
  if (config_path.empty()) return dpd::default_run_config();
  return dpd::load_run_config(config_path);
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw dpd::IoError("cannot create directory " + dir.string());
}

std::string format_defocus_list(const std::vector<double>& defocus_um) {
  std::string out = "[";
  for (std::size_t i = 0; i < defocus_um.size(); ++i) {
    if (i) out += ", ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", defocus_um[i]);
    out += buf;
  }
  return out + "]";
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  dpd::RunConfig config = load_config_or_default(config_path);
  if (seed_override) config.noise.rng_seed = *seed_override;

  const dpd::PupilGeometry geometry(config.grid, config.na);
  const dpd::RealImage truth = dpd::make_target(config.target, config.grid);
  const dpd::SimulatedDataset dataset =
      dpd::simulate_stack(truth, geometry, config.defocus_um, config.noise);
  const dpd::ZernikeBasis basis = dpd::make_zernike_basis(geometry, config.zernike_modes);

  ensure_directory(out_dir);
  dpd::write_dataset(out_dir, dataset, config.noise, truth, &basis);
  dpd::save_run_config(fs::path(out_dir) / "config.json", config);

  std::printf("simulated %zu x (%d x %d) amplitudes, defocus %s um -> %s\n",
              dataset.stack.size(), config.grid.width, config.grid.height,
              format_defocus_list(config.defocus_um).c_str(), out_dir.c_str());
  return 0;
}

void write_common_outputs(const fs::path& out, const dpd::ReconstructionResult& result,
                          const dpd::RunConfig& config) {
  dpd::write_pfm(out / "phase.pfm", result.phase);
  dpd::write_heatmap_png(out / "phase.png", result.phase, 0.0, 2.0 * M_PI);
  dpd::write_loss_csv(out / "loss.csv", result.loss_history);
  dpd::save_run_config(out / "config.json", config);
}

int cmd_reconstruct(const std::string& dataset_dir, const std::string& method,
                    const std::string& config_path, const std::string& out_dir,
                    std::optional<std::uint64_t> seed_override,
                    std::optional<long> iterations_override) {
  dpd::RunConfig config = load_config_or_default(config_path);
  const dpd::Dataset dataset = dpd::load_dataset(dataset_dir);
  ensure_directory(out_dir);
  const fs::path out(out_dir);

  if (method == "wf") {
    if (!dataset.has_known_pupils()) {
      throw std::invalid_argument("baseline requires known aberrations (no defocus list)");
    }
    if (iterations_override) config.wirtinger.iterations = *iterations_override;
    const dpd::MeasurementModel model = dataset.ground_truth_model();
    const dpd::ReconstructionResult result =
        dpd::solve_wirtinger(dataset.stack, model, config.wirtinger);
    write_common_outputs(out, result, config);
    std::printf("wf: %ld iterations, final loss %.6e -> %s\n", result.iterations_run,
                result.loss_history.back().second.total, out_dir.c_str());
    return 0;
  }

  // Blind reconstruction; only amplitudes and the pupil geometry are used.
  if (seed_override) config.decoder.rng_seed = *seed_override;
  if (iterations_override) config.rmsprop.iterations = *iterations_override;
  config.decoder.output_side = dataset.stack.grid.width;
  if (dataset.stack.grid.width != dataset.stack.grid.height) {
    throw std::invalid_argument("blind reconstruction expects a square grid");
  }
  const dpd::ZernikeBasis basis =
      dpd::make_zernike_basis(dataset.geometry, config.zernike_modes);
  const dpd::ReconstructionResult result =
      dpd::solve_dpd(dataset.stack, basis, config.decoder, config.rmsprop);

  write_common_outputs(out, result, config);
  dpd::write_zernike_csv(out / "zernike.csv", result.zernike_coeffs);
  dpd::save_decoder_weights(out / "weights.bin", config.decoder, result.decoder_weights);
  for (Eigen::Index n = 0; n < result.zernike_coeffs.rows(); ++n) {
    std::vector<double> coeffs(result.zernike_coeffs.row(n).begin(),
                               result.zernike_coeffs.row(n).end());
    const dpd::Pupil pupil = dpd::synthesize_pupil(basis, coeffs);
    dpd::RealImage phase_map(dataset.stack.grid);
    const dpd::RealVec values = dpd::pupil_phase(pupil);
    phase_map.values = values;
    char name[48];
    std::snprintf(name, sizeof(name), "pupil_phase_%03ld.png", static_cast<long>(n));
    dpd::write_heatmap_png(out / name, phase_map, -M_PI, M_PI, /*centered=*/true);
  }
  std::printf("dpd: %ld iterations, final loss %.6e -> %s\n", result.iterations_run,
              result.loss_history.back().second.total, out_dir.c_str());
  return 0;
}

int cmd_compare(const std::string& result_dir, const std::string& dataset_dir) {
  const dpd::Dataset dataset = dpd::load_dataset(dataset_dir);
  if (!dataset.truth_phase) {
    throw std::invalid_argument("dataset has no truth_phase.pfm to compare against");
  }
  const fs::path result(result_dir);
  const fs::path phase_path = result / "phase.pfm";
  if (!fs::exists(phase_path)) {
    throw std::invalid_argument("result directory has no phase.pfm");
  }
  const dpd::RealImage reconstructed = dpd::read_pfm(phase_path, dataset.stack.grid);

  dpd::MetricsReport metrics = dpd::compare_phase(reconstructed, *dataset.truth_phase);

  const fs::path zernike_path = result / "zernike.csv";
  if (dataset.truth_zernike && fs::exists(zernike_path)) {
    const Eigen::MatrixXd recovered = dpd::read_zernike_csv(zernike_path);
    if (recovered.rows() == dataset.truth_zernike->rows() &&
        recovered.cols() == dataset.truth_zernike->cols()) {
      for (Eigen::Index n = 0; n < recovered.rows(); ++n) {
        metrics.zernike_error.push_back(
            (recovered.row(n) - dataset.truth_zernike->row(n)).norm());
      }
    }
  }

  const fs::path loss_path = result / "loss.csv";
  if (fs::exists(loss_path)) {
    const std::string text = dpd::read_text_file(loss_path);
    const auto last_newline = text.find_last_not_of('\n');
    const auto line_start = text.rfind('\n', last_newline);
    const std::string last_line = text.substr(line_start + 1, last_newline - line_start);
    const auto comma = last_line.find(',');
    if (comma != std::string::npos) {
      metrics.loss_final = std::stod(last_line.substr(comma + 1));
    }
  }

  nlohmann::json doc;
  doc["rmse_offset_free"] = metrics.rmse_offset_free;
  doc["psnr_db"] = metrics.psnr_db;
  doc["zernike_error"] = metrics.zernike_error;
  doc["loss_final"] = metrics.loss_final;
  dpd::write_text_file(result / "metrics.json", doc.dump(2) + "\n");

  std::printf("%-18s %12s\n", "metric", "value");
  std::printf("%-18s %12.6f\n", "rmse_offset_free", metrics.rmse_offset_free);
  std::printf("%-18s %12.3f\n", "psnr_db", metrics.psnr_db);
  std::printf("%-18s %12.6e\n", "loss_final", metrics.loss_final);
  for (std::size_t n = 0; n < metrics.zernike_error.size(); ++n) {
    char key[32];
    std::snprintf(key, sizeof(key), "zernike_err[%zu]", n);
    std::printf("%-18s %12.6f\n", key, metrics.zernike_error[n]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind quantitative phase retrieval from through-focus stacks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dataset_dir, result_dir;
  std::string method = "dpd";
  std::optional<std::uint64_t> seed_override;
  std::optional<long> iterations_override;

  CLI::App* simulate = app.add_subcommand("simulate", "Write a synthetic dataset directory");
  simulate->add_option("--config", config_path, "Run configuration (JSON)");
  simulate->add_option("--out", out_dir, "Output dataset directory")->required();
  simulate->add_option("--seed", seed_override, "Override the noise RNG seed");

  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Run a reconstruction");
  reconstruct->add_option("dataset", dataset_dir, "Dataset directory")->required();
  reconstruct->add_option("--config", config_path, "Run configuration (JSON)");
  reconstruct->add_option("--out", out_dir, "Output result directory")->required();
  reconstruct->add_option("--method", method, "dpd (blind) or wf (known pupils)")
      ->check(CLI::IsMember({"dpd", "wf"}));
  reconstruct->add_option("--seed", seed_override, "Override the decoder RNG seed");
  reconstruct->add_option("--iterations", iterations_override, "Override the iteration budget");

  CLI::App* compare = app.add_subcommand("compare", "Score a result against ground truth");
  compare->add_option("result", result_dir, "Result directory")->required();
  compare->add_option("dataset", dataset_dir, "Dataset directory with truth")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, seed_override);
    if (reconstruct->parsed()) {
      return cmd_reconstruct(dataset_dir, method, config_path, out_dir, seed_override,
                             iterations_override);
    }
    return cmd_compare(result_dir, dataset_dir);
  } catch (const dpd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const dpd::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const dpd::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "precondition error: %s\n", e.what());
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
