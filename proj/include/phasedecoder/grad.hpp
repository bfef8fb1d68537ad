#ifndef PHASEDECODER_GRAD_HPP
#define PHASEDECODER_GRAD_HPP

#include <Eigen/Dense>
#include <vector>

#include "phasedecoder/decoder.hpp"
#include "phasedecoder/field.hpp"
#include "phasedecoder/forward.hpp"
#include "phasedecoder/zernike.hpp"

namespace dpd {

struct LossReport {
  double total = 0.0;
  std::vector<double> per_measurement;
};

// Cached forward state of one capture, enough to replay its loss term and to
// drive the adjoint pass.
struct MeasurementTape {
  ComplexVec pupil;     // P_n
  ComplexVec field;     // z_n = ifft(P_n * fft(o))
  RealVec amplitude;    // |z_n|
  ComplexVec spectrum_grad;  // conj(P_n) * fft(dL/d(conj z_n)), per measurement
};

/// Ordered record of the full forward pipeline. `replay_loss` recomputes the
/// objective from the cached per-measurement amplitudes and must reproduce
/// the recorded value exactly.
struct GradTape {
  DecoderTrace decoder;
  ComplexVec object;    // exp(j*phase)
  ComplexVec spectrum;  // fft(object)
  std::vector<MeasurementTape> measurements;
  LossReport recorded;

  double replay_loss(const FocusStack& stack) const;
};

/// Reverse-mode gradients of the blind-reconstruction objective
///   sum_n || a_n - |ifft(P_n(c_n) * fft(exp(j*G_p(W))))| ||^2
/// with hand-derived adjoints for every stage. Holds reusable workspace; one
/// engine serves one reconstruction at a time.
class DpdGradEngine {
 public:
  DpdGradEngine(const FocusStack& stack, const SeedTensor& seed, const ZernikeBasis& basis,
                const DecoderConfig& config);

  /// Accumulates nothing: gradient outputs are overwritten each call.
  LossReport loss_and_grad(const DecoderWeights& weights, const Eigen::MatrixXd& zernike_weights,
                           DecoderGradients& decoder_grad, Eigen::MatrixXd& zernike_grad);

  LossReport loss_only(const DecoderWeights& weights, const Eigen::MatrixXd& zernike_weights);

  const GradTape& tape() const { return tape_; }
  const Eigen::VectorXd& last_phase() const { return tape_.decoder.phase; }
  const FocusStack& stack() const { return stack_; }

 private:
  LossReport forward(const DecoderWeights& weights, const Eigen::MatrixXd& zernike_weights);

  const FocusStack& stack_;
  const SeedTensor& seed_;
  const ZernikeBasis& basis_;
  DecoderConfig config_;
  GradTape tape_;
};

/// Convenience wrapper around a one-shot engine.
LossReport dpd_loss_and_grad(const FocusStack& stack, const SeedTensor& seed,
                             const DecoderWeights& weights, const Eigen::MatrixXd& zernike_weights,
                             const ZernikeBasis& basis, const DecoderConfig& config,
                             DecoderGradients& decoder_grad, Eigen::MatrixXd& zernike_grad);

/// Loss and Wirtinger gradient of the known-pupil objective
///   sum_n || a_n - |ifft(P_n * fft(o))| ||^2.
/// The gradient is scaled so that steepest descent is o <- o - step * grad
/// (i.e. it equals 2 * dL/d(conj o)).
LossReport wf_loss_and_grad(const FocusStack& stack, const ComplexField& object,
                            const MeasurementModel& model, ComplexField& grad);

// Weight vector layout shared by the optimizer, the finite-difference tests
// and the checkpoint order: mix matrices, head, cn_bias, cn_scale, then the
// N x M Zernike coefficient matrix row by row.
struct ParameterPacking {
  DecoderConfig config;
  int measurement_count = 0;
  int mode_count = 0;

  Eigen::Index size() const;
  Eigen::VectorXd pack(const DecoderWeights& weights, const Eigen::MatrixXd& zernike) const;
  Eigen::VectorXd pack_gradients(const DecoderGradients& grads,
                                 const Eigen::MatrixXd& zernike_grad) const;
  void unpack(const Eigen::VectorXd& packed, DecoderWeights& weights,
              Eigen::MatrixXd& zernike) const;
};

}  // namespace dpd

#endif
