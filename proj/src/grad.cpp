#include "phasedecoder/grad.hpp"

#include <cmath>
#include <stdexcept>

#include "phasedecoder/fft.hpp"

namespace dpd {

namespace {

constexpr double kModulusFloor = 1e-12;  // subgradient floor for |z| at z = 0

// Shared by the recording and replay paths so both produce bit-identical
// sums (inlining either loop separately lets the compiler contract the
// arithmetic differently).
__attribute__((noinline)) double residual_norm2(const RealVec& target,
                                                const RealVec& amplitude) {
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = target[i] - amplitude[i];
    acc += r * r;
  }
  return acc;
}

}  // namespace

double GradTape::replay_loss(const FocusStack& stack) const {
  double total = 0.0;
  for (std::size_t n = 0; n < measurements.size(); ++n) {
    total += residual_norm2(stack.amplitudes[n].values, measurements[n].amplitude);
  }
  return total;
}

DpdGradEngine::DpdGradEngine(const FocusStack& stack, const SeedTensor& seed,
                             const ZernikeBasis& basis, const DecoderConfig& config)
    : stack_(stack), seed_(seed), basis_(basis), config_(config) {
  config_.validate();
  if (!(basis_.geometry.grid == stack_.grid)) {
    throw std::invalid_argument("DpdGradEngine: basis and stack grids differ");
  }
  if (config_.output_side != stack_.grid.width || config_.output_side != stack_.grid.height) {
    throw std::invalid_argument("DpdGradEngine: decoder output side must match the grid");
  }
  tape_.measurements.resize(stack_.size());
  const auto pixels = static_cast<std::size_t>(stack_.grid.pixel_count());
  tape_.object.resize(pixels);
  tape_.spectrum.resize(pixels);
  for (auto& m : tape_.measurements) {
    m.pupil.assign(pixels, Complex(0.0, 0.0));
    m.field.resize(pixels);
    m.amplitude.resize(pixels);
    m.spectrum_grad.resize(pixels);
  }
}

LossReport DpdGradEngine::forward(const DecoderWeights& weights,
                                  const Eigen::MatrixXd& zernike_weights) {
  const auto n_meas = static_cast<Eigen::Index>(stack_.size());
  if (zernike_weights.rows() != n_meas || zernike_weights.cols() != basis_.mode_count) {
    throw std::invalid_argument("DpdGradEngine: zernike weight matrix must be N x M");
  }

  const Eigen::VectorXd& phase = decoder_forward_trace(seed_, weights, config_, tape_.decoder);

  const auto pixels = static_cast<std::size_t>(stack_.grid.pixel_count());
  for (std::size_t i = 0; i < pixels; ++i) {
    tape_.object[i] = std::polar(1.0, phase(static_cast<Eigen::Index>(i)));
  }
  unitary_dft_2d(stack_.grid.height, stack_.grid.width, tape_.object.data(),
                 tape_.spectrum.data(), false);

  LossReport report;
  report.per_measurement.assign(stack_.size(), 0.0);

#pragma omp parallel for schedule(static)
  for (long n = 0; n < static_cast<long>(stack_.size()); ++n) {
    MeasurementTape& m = tape_.measurements[n];
    // Pupil from the coefficient row; zero outside the disk.
    for (int i : basis_.disk_indices) {
      double ph = 0.0;
      for (int mode = 0; mode < basis_.mode_count; ++mode) {
        ph += zernike_weights(n, mode) * basis_.modes[mode][i];
      }
      m.pupil[i] = std::polar(1.0, ph);
    }
    ComplexVec filtered(pixels, Complex(0.0, 0.0));
    for (int i : basis_.disk_indices) filtered[i] = m.pupil[i] * tape_.spectrum[i];
    unitary_dft_2d(stack_.grid.height, stack_.grid.width, filtered.data(), m.field.data(), true);

    for (std::size_t i = 0; i < pixels; ++i) m.amplitude[i] = std::abs(m.field[i]);
    report.per_measurement[n] = residual_norm2(stack_.amplitudes[n].values, m.amplitude);
  }

  for (double v : report.per_measurement) report.total += v;  // fixed ascending order
  tape_.recorded = report;
  return report;
}

LossReport DpdGradEngine::loss_only(const DecoderWeights& weights,
                                    const Eigen::MatrixXd& zernike_weights) {
  return forward(weights, zernike_weights);
}

LossReport DpdGradEngine::loss_and_grad(const DecoderWeights& weights,
                                        const Eigen::MatrixXd& zernike_weights,
                                        DecoderGradients& decoder_grad,
                                        Eigen::MatrixXd& zernike_grad) {
  const LossReport report = forward(weights, zernike_weights);

  const auto pixels = static_cast<std::size_t>(stack_.grid.pixel_count());
  zernike_grad.resize(static_cast<Eigen::Index>(stack_.size()), basis_.mode_count);

#pragma omp parallel for schedule(static)
  for (long n = 0; n < static_cast<long>(stack_.size()); ++n) {
    MeasurementTape& m = tape_.measurements[n];
    const RealVec& target = stack_.amplitudes[n].values;

    // dL/d(conj z) = (|z| - a) * z / |z|, with a floor at |z| = 0.
    ComplexVec field_grad(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
      const double amp = m.amplitude[i];
      field_grad[i] = (amp - target[i]) / std::max(amp, kModulusFloor) * m.field[i];
    }
    // Back through the inverse transform: adjoint of ifft is fft.
    ComplexVec filtered_grad(pixels);
    unitary_dft_2d(stack_.grid.height, stack_.grid.width, field_grad.data(),
                   filtered_grad.data(), false);

    // Pupil phase adjoint: theta_adj = 2*Im(conj(P) * u_adj * conj(s)),
    // projected onto each basis mode.
    for (int mode = 0; mode < basis_.mode_count; ++mode) {
      double acc = 0.0;
      for (int i : basis_.disk_indices) {
        const Complex w = std::conj(m.pupil[i]) * filtered_grad[i] * std::conj(tape_.spectrum[i]);
        acc += 2.0 * w.imag() * basis_.modes[mode][i];
      }
      zernike_grad(n, mode) = acc;
    }

    // Object spectrum adjoint for this capture.
    for (std::size_t i = 0; i < pixels; ++i) {
      m.spectrum_grad[i] = std::conj(m.pupil[i]) * filtered_grad[i];
    }
  }

  // Deterministic reduction across captures, then back to the object plane.
  ComplexVec spectrum_grad(pixels, Complex(0.0, 0.0));
  for (const MeasurementTape& m : tape_.measurements) {
    for (std::size_t i = 0; i < pixels; ++i) spectrum_grad[i] += m.spectrum_grad[i];
  }
  ComplexVec object_grad(pixels);
  unitary_dft_2d(stack_.grid.height, stack_.grid.width, spectrum_grad.data(), object_grad.data(),
                 true);

  // o = exp(j*phi): dL/dphi = 2*Im(conj(o) * dL/d(conj o)).
  Eigen::VectorXd phase_grad(static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < pixels; ++i) {
    phase_grad(static_cast<Eigen::Index>(i)) =
        2.0 * (std::conj(tape_.object[i]) * object_grad[i]).imag();
  }

  decoder_grad.resize(config_);
  decoder_backward(tape_.decoder, weights, config_, phase_grad, decoder_grad);
  return report;
}

LossReport dpd_loss_and_grad(const FocusStack& stack, const SeedTensor& seed,
                             const DecoderWeights& weights, const Eigen::MatrixXd& zernike_weights,
                             const ZernikeBasis& basis, const DecoderConfig& config,
                             DecoderGradients& decoder_grad, Eigen::MatrixXd& zernike_grad) {
  DpdGradEngine engine(stack, seed, basis, config);
  return engine.loss_and_grad(weights, zernike_weights, decoder_grad, zernike_grad);
}

LossReport wf_loss_and_grad(const FocusStack& stack, const ComplexField& object,
                            const MeasurementModel& model, ComplexField& grad) {
  if (!(object.grid == stack.grid)) {
    throw std::invalid_argument("wf_loss_and_grad: object and stack grids differ");
  }
  if (model.pupils.size() != stack.size()) {
    throw std::invalid_argument("wf_loss_and_grad: pupil count does not match stack");
  }
  const auto pixels = static_cast<std::size_t>(stack.grid.pixel_count());

  ComplexVec spectrum(pixels);
  unitary_dft_2d(stack.grid.height, stack.grid.width, object.values.data(), spectrum.data(),
                 false);

  LossReport report;
  report.per_measurement.assign(stack.size(), 0.0);
  std::vector<ComplexVec> spectrum_grads(stack.size(), ComplexVec(pixels));

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
      const double amp = std::abs(field[i]);
      const double r = target[i] - amp;
      acc += r * r;
      field[i] *= (amp - target[i]) / std::max(amp, kModulusFloor);
    }
    report.per_measurement[n] = acc;

    ComplexVec filtered_grad(pixels);
    unitary_dft_2d(stack.grid.height, stack.grid.width, field.data(), filtered_grad.data(),
                   false);
    ComplexVec& sgrad = spectrum_grads[n];
    for (std::size_t i = 0; i < pixels; ++i) sgrad[i] = std::conj(pupil[i]) * filtered_grad[i];
  }

  for (double v : report.per_measurement) report.total += v;

  ComplexVec total_grad(pixels, Complex(0.0, 0.0));
  for (const ComplexVec& sgrad : spectrum_grads) {
    for (std::size_t i = 0; i < pixels; ++i) total_grad[i] += sgrad[i];
  }
  grad = ComplexField(stack.grid);
  unitary_dft_2d(stack.grid.height, stack.grid.width, total_grad.data(), grad.values.data(),
                 true);
  for (auto& v : grad.values) v *= 2.0;  // steepest-descent scaling
  return report;
}

Eigen::Index ParameterPacking::size() const {
  return static_cast<Eigen::Index>(config.parameter_count()) +
         static_cast<Eigen::Index>(measurement_count) * mode_count;
}

Eigen::VectorXd ParameterPacking::pack(const DecoderWeights& weights,
                                       const Eigen::MatrixXd& zernike) const {
  Eigen::VectorXd packed(size());
  Eigen::Index pos = 0;
  const int k = config.channels;
  for (const auto& m : weights.mix) {
    packed.segment(pos, k * k) = Eigen::Map<const Eigen::VectorXd>(m.data(), k * k);
    pos += k * k;
  }
  packed.segment(pos, k) = weights.out;
  pos += k;
  for (const auto& v : weights.cn_bias) {
    packed.segment(pos, k) = v;
    pos += k;
  }
  for (const auto& v : weights.cn_scale) {
    packed.segment(pos, k) = v;
    pos += k;
  }
  for (int n = 0; n < measurement_count; ++n) {
    packed.segment(pos, mode_count) = zernike.row(n).transpose();
    pos += mode_count;
  }
  return packed;
}

Eigen::VectorXd ParameterPacking::pack_gradients(const DecoderGradients& grads,
                                                 const Eigen::MatrixXd& zernike_grad) const {
  DecoderWeights view;
  view.mix = grads.mix;
  view.out = grads.out;
  view.cn_bias = grads.cn_bias;
  view.cn_scale = grads.cn_scale;
  return pack(view, zernike_grad);
}

void ParameterPacking::unpack(const Eigen::VectorXd& packed, DecoderWeights& weights,
                              Eigen::MatrixXd& zernike) const {
  if (packed.size() != size()) throw std::invalid_argument("ParameterPacking: size mismatch");
  Eigen::Index pos = 0;
  const int k = config.channels;
  weights.mix.assign(static_cast<std::size_t>(config.layers), Eigen::MatrixXd(k, k));
  for (auto& m : weights.mix) {
    Eigen::Map<Eigen::VectorXd>(m.data(), k * k) = packed.segment(pos, k * k);
    pos += k * k;
  }
  weights.out = packed.segment(pos, k);
  pos += k;
  weights.cn_bias.assign(static_cast<std::size_t>(config.layers), Eigen::VectorXd(k));
  for (auto& v : weights.cn_bias) {
    v = packed.segment(pos, k);
    pos += k;
  }
  weights.cn_scale.assign(static_cast<std::size_t>(config.layers), Eigen::VectorXd(k));
  for (auto& v : weights.cn_scale) {
    v = packed.segment(pos, k);
    pos += k;
  }
  zernike.resize(measurement_count, mode_count);
  for (int n = 0; n < measurement_count; ++n) {
    zernike.row(n) = packed.segment(pos, mode_count).transpose();
    pos += mode_count;
  }
}

}  // namespace dpd
