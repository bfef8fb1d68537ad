#ifndef PHASEDECODER_SOLVERS_HPP
#define PHASEDECODER_SOLVERS_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phasedecoder/decoder.hpp"
#include "phasedecoder/field.hpp"
#include "phasedecoder/forward.hpp"
#include "phasedecoder/grad.hpp"
#include "phasedecoder/zernike.hpp"

namespace dpd {

struct RmsPropConfig {
  double learning_rate = 1e-2;
  double decay = 0.99;
  double epsilon = 1e-8;
  long iterations = 50000;
  long log_every = 100;

  void validate() const;
};

/// Nesterov-accelerated gradient descent on the complex object with momentum
/// beta_t = (t-1)/(t+2). A negative step_size requests the spectral default
/// 0.5 / (N * L) with L estimated by power iteration on sum A_n^H A_n; zero
/// is a legal degenerate step that leaves the iterate unchanged.
struct WirtingerConfig {
  double step_size = -1.0;
  long iterations = 5000;
  double tolerance = 0.0;  // relative loss-change stop; 0 disables
  long log_every = 100;

  void validate() const;
};

struct ReconstructionResult {
  RealImage phase;
  Eigen::MatrixXd zernike_coeffs;  // N x M for the blind solver, empty otherwise
  std::vector<std::pair<long, LossReport>> loss_history;  // (iteration, report)
  long iterations_run = 0;
  double wall_time_seconds = 0.0;
  DecoderWeights decoder_weights;  // final weights (blind solver only)
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// v <- decay*v + (1-decay)*g^2;  w <- w - lr*g/(sqrt(v)+eps), elementwise.
void rmsprop_step(Eigen::Ref<Eigen::VectorXd> weights, const Eigen::Ref<const Eigen::VectorXd>& grads,
                  Eigen::Ref<Eigen::VectorXd> state, const RmsPropConfig& opt);

/// Blind reconstruction: fits all decoder weights and per-capture Zernike
/// coefficients jointly to the measured amplitudes, starting from random
/// initialization. Aborts with DivergenceError when the loss exceeds 10x its
/// initial value.
ReconstructionResult solve_dpd(const FocusStack& stack, const ZernikeBasis& basis,
                               const DecoderConfig& decoder_config, const RmsPropConfig& opt);

/// Known-pupil baseline from a flat start (all-ones field). The step halves
/// whenever a candidate raises the loss (at most 20 times in total), so the
/// logged loss sequence is non-increasing. Returns the raw argument of the
/// recovered field.
ReconstructionResult solve_wirtinger(const FocusStack& stack, const MeasurementModel& model,
                                     const WirtingerConfig& opt);

}  // namespace dpd

#endif
