#include "phasedecoder/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "phasedecoder/fft.hpp"
#include "phasedecoder/rng.hpp"

namespace dpd {

namespace {

constexpr std::uint64_t kZernikeInitSalt = 0x9e3779b97f4a7c15ull;
constexpr double kZernikeInitStddev = 0.1;  // radians; keeps initial pupils near-ideal
constexpr int kMaxStepHalvings = 20;
constexpr int kPowerIterations = 30;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void log_progress(long iteration, double loss, double elapsed, long log_every) {
  if (log_every > 0) {
    std::fprintf(stderr, "%ld\t%.9e\t%.3f\n", iteration, loss, elapsed);
  }
}

// Loss of the known-pupil objective without the gradient pass.
LossReport wf_loss_only(const FocusStack& stack, const ComplexField& object,
                        const MeasurementModel& model) {
  const auto pixels = static_cast<std::size_t>(stack.grid.pixel_count());
  ComplexVec spectrum(pixels);
  unitary_dft_2d(stack.grid.height, stack.grid.width, object.values.data(), spectrum.data(),
                 false);
  LossReport report;
  report.per_measurement.assign(stack.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (long n = 0; n < static_cast<long>(stack.size()); ++n) {
    const ComplexVec& pupil = model.pupils[n].values;
    const RealVec& target = stack.amplitudes[n].values;
    ComplexVec filtered(pixels);
    for (std::size_t i = 0; i < pixels; ++i) filtered[i] = pupil[i] * spectrum[i];
    ComplexVec field(pixels);
    unitary_dft_2d(stack.grid.height, stack.grid.width, filtered.data(), field.data(), true);
    double acc = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) {
      const double r = target[i] - std::abs(field[i]);
      acc += r * r;
    }
    report.per_measurement[n] = acc;
  }
  for (double v : report.per_measurement) report.total += v;
  return report;
}

// Largest eigenvalue of sum_n A_n^H A_n = ifft . (sum |P_n|^2) . fft by power
// iteration; the operator is diagonal in the frequency basis.
double estimate_operator_norm(const FocusStack& stack, const MeasurementModel& model) {
  const auto pixels = static_cast<std::size_t>(stack.grid.pixel_count());
  RealVec gain(pixels, 0.0);
  for (const Pupil& p : model.pupils) {
    for (std::size_t i = 0; i < pixels; ++i) gain[i] += std::norm(p.values[i]);
  }
  Rng rng(0x5eedu);
  ComplexVec v(pixels);
  for (auto& x : v) x = Complex(rng.gaussian(), rng.gaussian());
  ComplexVec w(pixels);
  double eig = 0.0;
  for (int it = 0; it < kPowerIterations; ++it) {
    unitary_dft_2d(stack.grid.height, stack.grid.width, v.data(), w.data(), false);
    for (std::size_t i = 0; i < pixels; ++i) w[i] *= gain[i];
    unitary_dft_2d(stack.grid.height, stack.grid.width, w.data(), v.data(), true);
    double norm = 0.0;
    for (const auto& x : v) norm += std::norm(x);
    norm = std::sqrt(norm);
    if (norm == 0.0) return 1.0;
    eig = norm;
    for (auto& x : v) x /= norm;
  }
  return eig;
}

}  // namespace

void RmsPropConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("RmsPropConfig: learning_rate <= 0");
  if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("RmsPropConfig: decay not in (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("RmsPropConfig: epsilon <= 0");
  if (iterations < 0) throw std::invalid_argument("RmsPropConfig: negative iterations");
  if (log_every < 1) throw std::invalid_argument("RmsPropConfig: log_every < 1");
}

void WirtingerConfig::validate() const {
  if (std::isnan(step_size)) throw std::invalid_argument("WirtingerConfig: step_size is NaN");
  if (iterations < 0) throw std::invalid_argument("WirtingerConfig: negative iterations");
  if (tolerance < 0.0) throw std::invalid_argument("WirtingerConfig: negative tolerance");
  if (log_every < 1) throw std::invalid_argument("WirtingerConfig: log_every < 1");
}

void rmsprop_step(Eigen::Ref<Eigen::VectorXd> weights, const Eigen::Ref<const Eigen::VectorXd>& grads,
                  Eigen::Ref<Eigen::VectorXd> state, const RmsPropConfig& opt) {
  if (weights.size() != grads.size() || weights.size() != state.size()) {
    throw std::invalid_argument("rmsprop_step: shape mismatch");
  }
  state = opt.decay * state + (1.0 - opt.decay) * grads.cwiseProduct(grads);
  weights -= opt.learning_rate *
             grads.cwiseQuotient((state.cwiseSqrt().array() + opt.epsilon).matrix());
}

ReconstructionResult solve_dpd(const FocusStack& stack, const ZernikeBasis& basis,
                               const DecoderConfig& decoder_config, const RmsPropConfig& opt) {
  opt.validate();
  stack.validate();
  const auto start = Clock::now();

  auto [seed, weights] = init_decoder(decoder_config);

  const int n_meas = static_cast<int>(stack.size());
  const int n_modes = basis.mode_count;
  Eigen::MatrixXd zernike(n_meas, n_modes);
  Rng zrng(decoder_config.rng_seed ^ kZernikeInitSalt);
  for (int n = 0; n < n_meas; ++n) {
    for (int m = 0; m < n_modes; ++m) zernike(n, m) = kZernikeInitStddev * zrng.gaussian();
  }

  DpdGradEngine engine(stack, seed, basis, decoder_config);
  const ParameterPacking packing{decoder_config, n_meas, n_modes};

  Eigen::VectorXd packed = packing.pack(weights, zernike);
  Eigen::VectorXd rms_state = Eigen::VectorXd::Zero(packed.size());
  DecoderGradients decoder_grad;
  Eigen::MatrixXd zernike_grad;

  ReconstructionResult result;
  double initial_loss = -1.0;

  for (long t = 1; t <= opt.iterations; ++t) {
    const LossReport report = engine.loss_and_grad(weights, zernike, decoder_grad, zernike_grad);
    if (t == 1) {
      initial_loss = report.total;
      result.loss_history.emplace_back(0, report);
      log_progress(0, report.total, seconds_since(start), opt.log_every);
    } else if ((t - 1) % opt.log_every == 0) {
      result.loss_history.emplace_back(t - 1, report);
      log_progress(t - 1, report.total, seconds_since(start), opt.log_every);
    }
    if (report.total > 10.0 * initial_loss) {
      throw DivergenceError("solve_dpd: loss exceeded 10x its initial value at iteration " +
                                std::to_string(t - 1),
                            t - 1);
    }

    const Eigen::VectorXd grad = packing.pack_gradients(decoder_grad, zernike_grad);
    rmsprop_step(packed, grad, rms_state, opt);
    packing.unpack(packed, weights, zernike);
  }

  const LossReport final_report = engine.loss_only(weights, zernike);
  if (result.loss_history.empty() || result.loss_history.back().first != opt.iterations) {
    result.loss_history.emplace_back(opt.iterations, final_report);
    log_progress(opt.iterations, final_report.total, seconds_since(start), opt.log_every);
  }

  result.phase = RealImage(stack.grid);
  const Eigen::VectorXd& phase = engine.last_phase();
  for (std::size_t i = 0; i < result.phase.values.size(); ++i) {
    result.phase.values[i] = phase(static_cast<Eigen::Index>(i));
  }
  result.zernike_coeffs = zernike;
  result.iterations_run = opt.iterations;
  result.wall_time_seconds = seconds_since(start);
  result.decoder_weights = std::move(weights);
  return result;
}

ReconstructionResult solve_wirtinger(const FocusStack& stack, const MeasurementModel& model,
                                     const WirtingerConfig& opt) {
  opt.validate();
  stack.validate();
  model.validate();
  if (!(model.geometry.grid == stack.grid)) {
    throw std::invalid_argument("solve_wirtinger: model and stack grids differ");
  }
  if (model.pupils.size() != stack.size()) {
    throw std::invalid_argument("solve_wirtinger: pupil count does not match stack");
  }
  const auto start = Clock::now();

  double step = opt.step_size;
  if (step < 0.0) {
    const double norm_estimate = estimate_operator_norm(stack, model);
    step = 0.5 / (static_cast<double>(stack.size()) * norm_estimate);
  }

  ComplexField current(stack.grid, Complex(1.0, 0.0));
  ComplexField previous = current;
  ComplexField extrapolated(stack.grid);
  ComplexField gradient(stack.grid);

  LossReport current_report = wf_loss_only(stack, current, model);
  const double initial_loss = current_report.total;

  ReconstructionResult result;
  result.loss_history.emplace_back(0, current_report);
  log_progress(0, current_report.total, seconds_since(start), opt.log_every);

  long accepted = 0;  // momentum restarts reset this counter
  int halvings = 0;
  long t = 0;
  for (t = 1; t <= opt.iterations; ++t) {
    const double previous_loss = current_report.total;
    bool stepped = false;
    while (!stepped) {
      const double beta =
          static_cast<double>(accepted) / static_cast<double>(accepted + 3);
      const auto pixels = current.values.size();
      for (std::size_t i = 0; i < pixels; ++i) {
        extrapolated.values[i] =
            current.values[i] + beta * (current.values[i] - previous.values[i]);
      }
      wf_loss_and_grad(stack, extrapolated, model, gradient);

      ComplexField candidate(stack.grid);
      for (std::size_t i = 0; i < pixels; ++i) {
        candidate.values[i] = extrapolated.values[i] - step * gradient.values[i];
      }
      LossReport candidate_report = wf_loss_only(stack, candidate, model);

      if (candidate_report.total <= current_report.total) {
        previous = std::move(current);
        current = std::move(candidate);
        current_report = std::move(candidate_report);
        ++accepted;
        stepped = true;
      } else {
        ++halvings;
        if (halvings > kMaxStepHalvings) {
          throw DivergenceError(
              "solve_wirtinger: step halved more than 20 times at iteration " + std::to_string(t),
              t);
        }
        step *= 0.5;
        accepted = 0;   // restart momentum from the current iterate
        previous = current;
      }
    }

    if (t % opt.log_every == 0) {
      result.loss_history.emplace_back(t, current_report);
      log_progress(t, current_report.total, seconds_since(start), opt.log_every);
    }
    if (opt.tolerance > 0.0 && previous_loss > 0.0 &&
        std::abs(previous_loss - current_report.total) <= opt.tolerance * previous_loss) {
      break;
    }
  }
  const long iterations_run = std::min(t, opt.iterations);
  if (result.loss_history.back().first != iterations_run) {
    result.loss_history.emplace_back(iterations_run, current_report);
    log_progress(iterations_run, current_report.total, seconds_since(start), opt.log_every);
  }

  result.phase = RealImage(stack.grid);
  for (std::size_t i = 0; i < current.values.size(); ++i) {
    result.phase.values[i] = std::arg(current.values[i]);
  }
  result.iterations_run = iterations_run;
  result.wall_time_seconds = seconds_since(start);
  return result;
}

}  // namespace dpd
