#include <doctest.h>

#include <cmath>
#include <map>

#include "phasedecoder/rng.hpp"
#include "phasedecoder/sim.hpp"

using namespace dpd;

namespace {

PupilGeometry paper_geometry(int n, double pixel = 0.1625) {
  return PupilGeometry(Grid2D(n, n, pixel, 0.514), 0.65);
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("flat target is all zeros") {
  TargetSpec spec;
  spec.kind = TargetKind::Flat;
  const RealImage image = make_target(spec, Grid2D(32, 32, 0.2, 0.5));
  for (double v : image.values) CHECK(v == 0.0);
}

TEST_CASE("disk-array histogram has exactly the two expected values") {
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.contrast = 0.95;
  spec.feature_scale = 16;
  const RealImage image = make_target(spec, Grid2D(128, 128, 0.2, 0.5));
  std::map<double, int> histogram;
  for (double v : image.values) ++histogram[v];
  REQUIRE(histogram.size() == 2);
  CHECK(histogram.begin()->first == 0.0);
  CHECK(histogram.rbegin()->first == 0.95);
  CHECK(histogram.rbegin()->second > 0);
}

TEST_CASE("bar groups: smallest run equals the feature scale") {
  TargetSpec spec;
  spec.kind = TargetKind::BarGroups;
  spec.contrast = 0.95;
  spec.feature_scale = 3;
  const RealImage image = make_target(spec, Grid2D(128, 128, 0.2, 0.5));

  // Run-length analysis down a center column.
  const int x = 64;
  int smallest_on_run = 1 << 20;
  int run = 0;
  for (int y = 0; y < image.grid.height; ++y) {
    if (image.at(y, x) > 0.0) {
      ++run;
    } else if (run > 0) {
      smallest_on_run = std::min(smallest_on_run, run);
      run = 0;
    }
  }
  CHECK(smallest_on_run == spec.feature_scale);
}

TEST_CASE("siemens star is binary and centered") {
  TargetSpec spec;
  spec.kind = TargetKind::SiemensStar;
  spec.contrast = 0.5;
  spec.feature_scale = 6;
  const RealImage image = make_target(spec, Grid2D(64, 64, 0.2, 0.5));
  for (double v : image.values) CHECK((v == 0.0 || v == 0.5));
  double total = 0.0;
  for (double v : image.values) total += v;
  CHECK(total > 0.0);
}

TEST_CASE("contrast bounds are enforced") {
  TargetSpec spec;
  spec.contrast = -0.5;
  CHECK_THROWS_AS(make_target(spec, Grid2D(32, 32, 0.2, 0.5)), std::invalid_argument);
  spec.contrast = 7.0;  // > 2*pi
  CHECK_THROWS_AS(make_target(spec, Grid2D(32, 32, 0.2, 0.5)), std::invalid_argument);
}

TEST_CASE("noiseless simulate equals forward_stack with defocus pupils") {
  const PupilGeometry geometry = paper_geometry(64);
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.feature_scale = 8;
  const RealImage target = make_target(spec, geometry.grid);
  const std::vector<double> defocus = {0.0, 1.0, 2.0, 4.0};
  const SimulatedDataset data = simulate_stack(target, geometry, defocus, NoiseSpec{});
  REQUIRE(data.stack.size() == 4);

  MeasurementModel model;
  model.geometry = geometry;
  for (double z : defocus) model.pupils.push_back(defocus_pupil(geometry, z));
  const FocusStack direct = forward_stack(target, model);
  for (std::size_t n = 0; n < direct.size(); ++n) {
    for (std::size_t i = 0; i < direct.amplitudes[n].values.size(); ++i) {
      CHECK(data.stack.amplitudes[n].values[i] == direct.amplitudes[n].values[i]);
    }
  }
}

TEST_CASE("defocus 0 with a flat phase gives all ones") {
  const PupilGeometry geometry = paper_geometry(32);
  const RealImage flat(geometry.grid);
  const SimulatedDataset data = simulate_stack(flat, geometry, {0.0}, NoiseSpec{});
  for (double v : data.stack.amplitudes[0].values) {
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("paper schedule yields eight captures") {
  const PupilGeometry geometry = paper_geometry(32);
  const RealImage flat(geometry.grid);
  const SimulatedDataset data =
      simulate_stack(flat, geometry, {0, 1, 2, 4, 8, 16, 32, 64}, NoiseSpec{});
  CHECK(data.stack.size() == 8);
  CHECK(data.model.pupils.size() == 8);
}

TEST_CASE("huge photon counts converge to the noiseless stack") {
  const PupilGeometry geometry = paper_geometry(32);
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.feature_scale = 8;
  const RealImage target = make_target(spec, geometry.grid);

  const SimulatedDataset clean = simulate_stack(target, geometry, {1.0, 4.0}, NoiseSpec{});
  NoiseSpec noisy;
  noisy.model = NoiseModel::Poisson;
  noisy.parameter = 1e8;
  noisy.rng_seed = 3;
  const SimulatedDataset shot = simulate_stack(target, geometry, {1.0, 4.0}, noisy);

  double max_delta = 0.0;
  for (std::size_t n = 0; n < clean.stack.size(); ++n) {
    for (std::size_t i = 0; i < clean.stack.amplitudes[n].values.size(); ++i) {
      max_delta = std::max(max_delta, std::abs(clean.stack.amplitudes[n].values[i] -
                                               shot.stack.amplitudes[n].values[i]));
    }
  }
  CHECK(max_delta < 1e-2);
}

TEST_CASE("noise is reproducible from its seed") {
  const PupilGeometry geometry = paper_geometry(32);
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.feature_scale = 8;
  const RealImage target = make_target(spec, geometry.grid);
  NoiseSpec noise;
  noise.model = NoiseModel::GaussianOnIntensity;
  noise.parameter = 0.05;
  noise.rng_seed = 11;
  const SimulatedDataset a = simulate_stack(target, geometry, {1.0}, noise);
  const SimulatedDataset b = simulate_stack(target, geometry, {1.0}, noise);
  for (std::size_t i = 0; i < a.stack.amplitudes[0].values.size(); ++i) {
    CHECK(a.stack.amplitudes[0].values[i] == b.stack.amplitudes[0].values[i]);
  }
}

TEST_CASE("compare_phase: identity and constant offsets") {
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.feature_scale = 8;
  const Grid2D grid(64, 64, 0.2, 0.5);
  const RealImage truth = make_target(spec, grid);

  CHECK(compare_phase(truth, truth).rmse_offset_free == doctest::Approx(0.0).epsilon(1e-12));

  RealImage shifted = truth;
  for (double& v : shifted.values) v += 1.3;
  CHECK(compare_phase(shifted, truth).rmse_offset_free < 1e-9);

  // Invariance holds for offsets of either argument.
  CHECK(compare_phase(truth, shifted).rmse_offset_free < 1e-9);
}

TEST_CASE("compare_phase: gaussian perturbation is measured faithfully") {
  // Monte Carlo oracle: the offset-free rmse of truth + N(0, 0.1) clusters
  // around 0.1 within a few percent.
  const Grid2D grid(64, 64, 0.2, 0.5);
  TargetSpec spec;
  spec.kind = TargetKind::DiskArray;
  spec.feature_scale = 8;
  const RealImage truth = make_target(spec, grid);

  Rng rng(21);
  double mean_rmse = 0.0;
  const int trials = 8;
  for (int t = 0; t < trials; ++t) {
    RealImage noisy = truth;
    for (double& v : noisy.values) v += 0.1 * rng.gaussian();
    mean_rmse += compare_phase(noisy, truth).rmse_offset_free;
  }
  mean_rmse /= trials;
  CHECK(mean_rmse == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("compare_phase works in the circular sense") {
  const Grid2D grid(32, 32, 0.2, 0.5);
  RealImage a(grid), b(grid);
  // A wrap-around offset: 0.1 vs 2*pi + 0.1 are the same angle.
  for (double& v : a.values) v = 0.1;
  for (double& v : b.values) v = 2.0 * M_PI + 0.1;
  CHECK(compare_phase(a, b).rmse_offset_free < 1e-9);
}

}  // TEST_SUITE
