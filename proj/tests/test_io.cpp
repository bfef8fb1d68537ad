#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "phasedecoder/dataset.hpp"
#include "phasedecoder/io.hpp"
#include "phasedecoder/rng.hpp"
#include "phasedecoder/sim.hpp"

using namespace dpd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "dpd_io_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("io") {

TEST_CASE("pfm round trip at float precision") {
  TempDir tmp;
  const Grid2D grid(32, 16, 0.2, 0.5);
  RealImage image(grid);
  Rng rng(13);
  for (double& v : image.values) v = 10.0 * rng.gaussian();

  const fs::path path = tmp.path / "test.pfm";
  write_pfm(path, image);
  const RealImage back = read_pfm(path, grid);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    CHECK(back.values[i] == doctest::Approx(image.values[i]).epsilon(1e-6));
    CHECK(back.values[i] == static_cast<double>(static_cast<float>(image.values[i])));
  }
  CHECK(read_pfm_size(path) == std::pair<int, int>{32, 16});

  // Byte-identical rewrite.
  const fs::path again = tmp.path / "test2.pfm";
  write_pfm(again, image);
  CHECK(read_text_file(path) == read_text_file(again));
}

TEST_CASE("pfm rejects wrong grids and truncated files") {
  TempDir tmp;
  const Grid2D grid(16, 16, 0.2, 0.5);
  RealImage image(grid);
  const fs::path path = tmp.path / "small.pfm";
  write_pfm(path, image);
  CHECK_THROWS_AS(read_pfm(path, Grid2D(32, 32, 0.2, 0.5)), IoError);

  write_text_file(tmp.path / "bad.pfm", "Pf\n16 16\n-1.0\nshort");
  CHECK_THROWS_AS(read_pfm(tmp.path / "bad.pfm", grid), IoError);
}

TEST_CASE("zernike csv round trip") {
  TempDir tmp;
  Eigen::MatrixXd coeffs(3, 4);
  Rng rng(17);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs.data()[i] = rng.gaussian();
  const fs::path path = tmp.path / "z.csv";
  write_zernike_csv(path, coeffs);
  const Eigen::MatrixXd back = read_zernike_csv(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK((back - coeffs).cwiseAbs().maxCoeff() == 0.0);  // %.17g is lossless
}

TEST_CASE("loss csv format") {
  TempDir tmp;
  std::vector<std::pair<long, LossReport>> history;
  history.push_back({0, LossReport{12.5, {12.5}}});
  history.push_back({100, LossReport{1.25, {1.25}}});
  const fs::path path = tmp.path / "loss.csv";
  write_loss_csv(path, history);
  const std::string text = read_text_file(path);
  CHECK(text == "iteration,loss\n0,12.5\n100,1.25\n");
}

TEST_CASE("png heatmap writes a valid signature") {
  TempDir tmp;
  const Grid2D grid(32, 32, 0.2, 0.5);
  RealImage image(grid);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) image.at(y, x) = (x + y) / 64.0 * 2.0 * M_PI;
  }
  const fs::path path = tmp.path / "phase.png";
  write_heatmap_png(path, image, 0.0, 2.0 * M_PI);
  std::ifstream is(path, std::ios::binary);
  unsigned char signature[8];
  is.read(reinterpret_cast<char*>(signature), 8);
  CHECK(signature[0] == 0x89);
  CHECK(signature[1] == 'P');
  CHECK(signature[2] == 'N');
  CHECK(signature[3] == 'G');
}

TEST_CASE("dataset directory round trip") {
  TempDir tmp;
  const Grid2D grid(32, 32, 0.1625, 0.514);
  const PupilGeometry geometry(grid, 0.65);
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.feature_scale = 8;
  const RealImage truth = make_target(spec, grid);
  const std::vector<double> defocus = {1.0, 4.0};
  const SimulatedDataset simulated = simulate_stack(truth, geometry, defocus, NoiseSpec{});
  const ZernikeBasis basis = make_zernike_basis(geometry, 4);

  const fs::path dir = tmp.path / "dataset";
  write_dataset(dir, simulated, NoiseSpec{}, truth, &basis);
  CHECK(fs::exists(dir / "stack.json"));
  CHECK(fs::exists(dir / "amp_000.pfm"));
  CHECK(fs::exists(dir / "amp_001.pfm"));
  CHECK(fs::exists(dir / "truth_phase.pfm"));
  CHECK(fs::exists(dir / "truth_zernike.csv"));

  const Dataset loaded = load_dataset(dir);
  CHECK(loaded.stack.size() == 2);
  CHECK(loaded.stack.grid == grid);
  CHECK(loaded.geometry.na == doctest::Approx(0.65));
  CHECK(loaded.defocus_um == defocus);
  REQUIRE(loaded.truth_phase.has_value());
  CHECK(offset_free_rmse(*loaded.truth_phase, truth) < 1e-6);
  REQUIRE(loaded.truth_zernike.has_value());
  CHECK(loaded.truth_zernike->rows() == 2);
  CHECK(loaded.truth_zernike->cols() == 4);

  // The stored truth coefficients are dominated by the defocus mode.
  const Eigen::MatrixXd& tz = *loaded.truth_zernike;
  Eigen::Index argmax = 0;
  tz.row(1).cwiseAbs().maxCoeff(&argmax);
  CHECK(argmax == 2);

  for (std::size_t n = 0; n < loaded.stack.size(); ++n) {
    for (std::size_t i = 0; i < loaded.stack.amplitudes[n].values.size(); ++i) {
      CHECK(loaded.stack.amplitudes[n].values[i] ==
            doctest::Approx(simulated.stack.amplitudes[n].values[i]).epsilon(1e-6));
    }
  }

  MeasurementModel model = loaded.ground_truth_model();
  CHECK(model.pupils.size() == 2);
}

TEST_CASE("dataset without pupils reports no ground truth model") {
  TempDir tmp;
  const Grid2D grid(16, 16, 0.1625, 0.514);
  const PupilGeometry geometry(grid, 0.65);
  const RealImage flat(grid);
  SimulatedDataset simulated = simulate_stack(flat, geometry, {0.0}, NoiseSpec{});
  const fs::path dir = tmp.path / "nopupils";
  write_dataset(dir, simulated, NoiseSpec{}, flat, nullptr);

  // Drop the defocus list to emulate an externally captured stack.
  auto meta = nlohmann::json::parse(read_text_file(dir / "stack.json"));
  meta.erase("defocus_um");
  write_text_file(dir / "stack.json", meta.dump(2) + "\n");

  const Dataset loaded = load_dataset(dir);
  CHECK_FALSE(loaded.has_known_pupils());
  CHECK_THROWS_AS(loaded.ground_truth_model(), std::invalid_argument);
}

}  // TEST_SUITE
