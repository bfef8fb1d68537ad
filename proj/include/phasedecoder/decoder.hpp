#ifndef PHASEDECODER_DECODER_HPP
#define PHASEDECODER_DECODER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "phasedecoder/field.hpp"

namespace dpd {

/// Shape of the untrained phase generator. A config with d layers upsamples
/// on layers 1..d-1 and runs the last layer at full resolution, so
/// seed_side * upsample_factor^(layers-1) must equal output_side.
struct DecoderConfig {
  int channels = 32;        // k
  int seed_side = 16;       // n0 (square seed)
  int output_side = 512;    // nd (square output)
  int layers = 6;           // d
  int upsample_factor = 2;
  std::uint64_t rng_seed = 0;

  int upsampling_layers() const { return layers - 1; }
  std::int64_t parameter_count() const;  // mix + head + cn affine terms
  void validate() const;
};

/// Fixed random input tensor B0, regenerable exactly from the config seed.
struct SeedTensor {
  int side = 0;
  int channels = 0;
  Eigen::MatrixXd values;  // (side*side) x channels, pixels row-major
};

struct DecoderWeights {
  std::vector<Eigen::MatrixXd> mix;       // layers of k x k
  Eigen::VectorXd out;                    // k
  std::vector<Eigen::VectorXd> cn_bias;   // layers of k
  std::vector<Eigen::VectorXd> cn_scale;  // layers of k
};

/// Gradient of a scalar loss with respect to every decoder weight; shapes
/// mirror DecoderWeights.
struct DecoderGradients {
  std::vector<Eigen::MatrixXd> mix;
  Eigen::VectorXd out;
  std::vector<Eigen::VectorXd> cn_bias;
  std::vector<Eigen::VectorXd> cn_scale;

  void resize(const DecoderConfig& config);
  void set_zero();
};

/// Seed from uniform(0,1); mix and head entries zero-mean Gaussian with
/// stddev sqrt(2/k); cn scale 1, bias 0. Fully determined by config.rng_seed.
std::pair<SeedTensor, DecoderWeights> init_decoder(const DecoderConfig& config);

/// Forward intermediates cached for the backward pass.
struct DecoderTrace {
  std::vector<Eigen::MatrixXd> input;        // B_i entering layer i; input[d] = B_d
  std::vector<Eigen::MatrixXd> pre_relu;     // mix + upsample output per layer
  std::vector<Eigen::MatrixXd> normalized;   // standardized activations (pre-affine)
  std::vector<Eigen::RowVectorXd> inv_std;   // per layer, per channel
  Eigen::VectorXd phase;                     // 2*pi*sigmoid(B_d * out)
};

/// Phase vector in (0, 2*pi), length output_side^2, pixels row-major.
const Eigen::VectorXd& decoder_forward_trace(const SeedTensor& seed, const DecoderWeights& weights,
                                             const DecoderConfig& config, DecoderTrace& trace);

RealImage decoder_forward(const SeedTensor& seed, const DecoderWeights& weights,
                          const DecoderConfig& config, const Grid2D& grid);

/// Accumulates d(loss)/d(weights) into `grads` given d(loss)/d(phase).
void decoder_backward(const DecoderTrace& trace, const DecoderWeights& weights,
                      const DecoderConfig& config, const Eigen::VectorXd& phase_grad,
                      DecoderGradients& grads);

/// Corner-aligned bilinear interpolation of each channel column from
/// (in_side x in_side) to (in_side*factor)^2, and its exact transpose.
Eigen::MatrixXd bilinear_upsample(const Eigen::MatrixXd& channels, int in_side, int factor);
Eigen::MatrixXd bilinear_upsample_adjoint(const Eigen::MatrixXd& channels, int out_side,
                                          int factor);

// Flat little-endian checkpoint: magic, config, then weights in declared
// order (mix, out, cn_bias, cn_scale) as 64-bit floats.
void save_decoder_weights(const std::filesystem::path& path, const DecoderConfig& config,
                          const DecoderWeights& weights);
std::pair<DecoderConfig, DecoderWeights> load_decoder_weights(const std::filesystem::path& path);

}  // namespace dpd

#endif
