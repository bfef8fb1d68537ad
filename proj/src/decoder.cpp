#include "phasedecoder/decoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "phasedecoder/rng.hpp"

namespace dpd {

namespace {

constexpr double kCnEpsilon = 1e-6;  // variance floor; keeps the all-zero init finite
constexpr std::uint32_t kCheckpointMagic = 0x44504457;  // "WDPD" little-endian
constexpr std::uint32_t kCheckpointVersion = 1;

// 1-D corner-aligned interpolation stencil: out[j] blends in[lo[j]], in[hi[j]].
struct InterpAxis {
  std::vector<int> lo, hi;
  std::vector<double> frac;

  InterpAxis(int in_size, int out_size) : lo(out_size), hi(out_size), frac(out_size) {
    const double scale =
        (out_size > 1) ? static_cast<double>(in_size - 1) / (out_size - 1) : 0.0;
    for (int j = 0; j < out_size; ++j) {
      const double x = j * scale;
      int i0 = static_cast<int>(std::floor(x));
      if (i0 > in_size - 2) i0 = in_size - 2;
      if (i0 < 0) i0 = 0;
      lo[j] = i0;
      hi[j] = i0 + 1 < in_size ? i0 + 1 : i0;
      frac[j] = x - i0;
    }
  }
};

void sample_gaussian_matrix(Eigen::MatrixXd& m, double stddev, Rng& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = stddev * rng.gaussian();
  }
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

std::int64_t DecoderConfig::parameter_count() const {
  const std::int64_t k = channels;
  return layers * k * k      // mix matrices
         + k                 // head
         + 2 * layers * k;   // cn scale and bias
}

void DecoderConfig::validate() const {
  if (channels < 1) throw std::invalid_argument("DecoderConfig: channels must be >= 1");
  if (layers < 1) throw std::invalid_argument("DecoderConfig: layers must be >= 1");
  if (seed_side < 1 || output_side < 1) {
    throw std::invalid_argument("DecoderConfig: sides must be positive");
  }
  if (upsample_factor < 1) throw std::invalid_argument("DecoderConfig: factor must be >= 1");
  std::int64_t side = seed_side;
  for (int i = 0; i < upsampling_layers(); ++i) side *= upsample_factor;
  if (side != output_side) {
    throw std::invalid_argument(
        "DecoderConfig: seed_side * factor^(layers-1) must equal output_side");
  }
}

void DecoderGradients::resize(const DecoderConfig& config) {
  mix.assign(static_cast<std::size_t>(config.layers),
             Eigen::MatrixXd(config.channels, config.channels));
  out.resize(config.channels);
  cn_bias.assign(static_cast<std::size_t>(config.layers), Eigen::VectorXd(config.channels));
  cn_scale.assign(static_cast<std::size_t>(config.layers), Eigen::VectorXd(config.channels));
  set_zero();
}

void DecoderGradients::set_zero() {
  for (auto& m : mix) m.setZero();
  out.setZero();
  for (auto& v : cn_bias) v.setZero();
  for (auto& v : cn_scale) v.setZero();
}

std::pair<SeedTensor, DecoderWeights> init_decoder(const DecoderConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);

  SeedTensor seed;
  seed.side = config.seed_side;
  seed.channels = config.channels;
  seed.values.resize(config.seed_side * config.seed_side, config.channels);
  for (Eigen::Index c = 0; c < seed.values.cols(); ++c) {
    for (Eigen::Index r = 0; r < seed.values.rows(); ++r) seed.values(r, c) = rng.uniform01();
  }

  const double stddev = std::sqrt(2.0 / config.channels);
  DecoderWeights weights;
  weights.mix.resize(static_cast<std::size_t>(config.layers));
  for (auto& m : weights.mix) {
    m.resize(config.channels, config.channels);
    sample_gaussian_matrix(m, stddev, rng);
  }
  weights.out.resize(config.channels);
  for (Eigen::Index i = 0; i < weights.out.size(); ++i) {
    weights.out(i) = stddev * rng.gaussian();
  }
  weights.cn_bias.assign(static_cast<std::size_t>(config.layers),
                         Eigen::VectorXd::Zero(config.channels));
  weights.cn_scale.assign(static_cast<std::size_t>(config.layers),
                          Eigen::VectorXd::Ones(config.channels));
  return {std::move(seed), std::move(weights)};
}

Eigen::MatrixXd bilinear_upsample(const Eigen::MatrixXd& channels, int in_side, int factor) {
  if (factor < 1) throw std::invalid_argument("bilinear_upsample: factor must be >= 1");
  if (channels.rows() != static_cast<Eigen::Index>(in_side) * in_side) {
    throw std::invalid_argument("bilinear_upsample: row count does not match in_side^2");
  }
  if (factor == 1) return channels;
  const int out_side = in_side * factor;
  const InterpAxis axis(in_side, out_side);
  const Eigen::Index k = channels.cols();

  // Separable: rows first (in_side x in_side -> out_side x in_side), then columns.
  Eigen::MatrixXd result(static_cast<Eigen::Index>(out_side) * out_side, k);
  Eigen::MatrixXd tmp(static_cast<Eigen::Index>(out_side) * in_side, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double* src = channels.col(c).data();
    double* mid = tmp.col(c).data();
    for (int y = 0; y < out_side; ++y) {
      const double* row0 = src + static_cast<std::ptrdiff_t>(axis.lo[y]) * in_side;
      const double* row1 = src + static_cast<std::ptrdiff_t>(axis.hi[y]) * in_side;
      const double w = axis.frac[y];
      double* dst = mid + static_cast<std::ptrdiff_t>(y) * in_side;
      for (int x = 0; x < in_side; ++x) dst[x] = (1.0 - w) * row0[x] + w * row1[x];
    }
    double* out = result.col(c).data();
    for (int y = 0; y < out_side; ++y) {
      const double* row = mid + static_cast<std::ptrdiff_t>(y) * in_side;
      double* dst = out + static_cast<std::ptrdiff_t>(y) * out_side;
      for (int x = 0; x < out_side; ++x) {
        dst[x] = (1.0 - axis.frac[x]) * row[axis.lo[x]] + axis.frac[x] * row[axis.hi[x]];
      }
    }
  }
  return result;
}

Eigen::MatrixXd bilinear_upsample_adjoint(const Eigen::MatrixXd& channels, int out_side,
                                          int factor) {
  if (factor < 1) throw std::invalid_argument("bilinear_upsample_adjoint: factor must be >= 1");
  if (channels.rows() != static_cast<Eigen::Index>(out_side) * out_side) {
    throw std::invalid_argument("bilinear_upsample_adjoint: row count does not match out_side^2");
  }
  if (factor == 1) return channels;
  if (out_side % factor != 0) {
    throw std::invalid_argument("bilinear_upsample_adjoint: out_side not divisible by factor");
  }
  const int in_side = out_side / factor;
  const InterpAxis axis(in_side, out_side);
  const Eigen::Index k = channels.cols();

  Eigen::MatrixXd result = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(in_side) * in_side, k);
  Eigen::MatrixXd tmp(static_cast<Eigen::Index>(out_side) * in_side, k);
  tmp.setZero();
  for (Eigen::Index c = 0; c < k; ++c) {
    // Transpose of the column pass: scatter within each row.
    const double* src = channels.col(c).data();
    double* mid = tmp.col(c).data();
    for (int y = 0; y < out_side; ++y) {
      const double* row = src + static_cast<std::ptrdiff_t>(y) * out_side;
      double* dst = mid + static_cast<std::ptrdiff_t>(y) * in_side;
      for (int x = 0; x < out_side; ++x) {
        dst[axis.lo[x]] += (1.0 - axis.frac[x]) * row[x];
        dst[axis.hi[x]] += axis.frac[x] * row[x];
      }
    }
    // Transpose of the row pass: scatter rows.
    double* out = result.col(c).data();
    for (int y = 0; y < out_side; ++y) {
      const double* row = mid + static_cast<std::ptrdiff_t>(y) * in_side;
      const double w = axis.frac[y];
      double* dst0 = out + static_cast<std::ptrdiff_t>(axis.lo[y]) * in_side;
      double* dst1 = out + static_cast<std::ptrdiff_t>(axis.hi[y]) * in_side;
      for (int x = 0; x < in_side; ++x) {
        dst0[x] += (1.0 - w) * row[x];
        dst1[x] += w * row[x];
      }
    }
  }
  return result;
}

const Eigen::VectorXd& decoder_forward_trace(const SeedTensor& seed, const DecoderWeights& weights,
                                             const DecoderConfig& config, DecoderTrace& trace) {
  config.validate();
  if (seed.side != config.seed_side || seed.channels != config.channels) {
    throw std::invalid_argument("decoder_forward: seed does not match config");
  }
  if (static_cast<int>(weights.mix.size()) != config.layers ||
      weights.out.size() != config.channels) {
    throw std::invalid_argument("decoder_forward: weights do not match config");
  }

  const int d = config.layers;
  trace.input.resize(static_cast<std::size_t>(d) + 1);
  trace.pre_relu.resize(static_cast<std::size_t>(d));
  trace.normalized.resize(static_cast<std::size_t>(d));
  trace.inv_std.resize(static_cast<std::size_t>(d));

  trace.input[0] = seed.values;
  int side = config.seed_side;
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd mixed = trace.input[i] * weights.mix[i];
    if (i < d - 1) {
      trace.pre_relu[i] = bilinear_upsample(mixed, side, config.upsample_factor);
      side *= config.upsample_factor;
    } else {
      trace.pre_relu[i] = std::move(mixed);
    }

    const Eigen::MatrixXd& pre = trace.pre_relu[i];
    const auto pixels = static_cast<double>(pre.rows());
    Eigen::MatrixXd& xhat = trace.normalized[i];
    xhat = pre.cwiseMax(0.0);

    Eigen::RowVectorXd mean = xhat.colwise().mean();
    Eigen::RowVectorXd var =
        xhat.colwise().squaredNorm() / pixels - mean.cwiseProduct(mean);
    var = var.cwiseMax(0.0);
    trace.inv_std[i] = (var.array() + kCnEpsilon).rsqrt();

    xhat.rowwise() -= mean;
    xhat.array().rowwise() *= trace.inv_std[i].array();

    trace.input[i + 1] =
        (xhat.array().rowwise() * weights.cn_scale[i].transpose().array()).matrix();
    trace.input[i + 1].rowwise() += weights.cn_bias[i].transpose();
  }

  const Eigen::VectorXd head = trace.input[d] * weights.out;
  trace.phase = (2.0 * M_PI) / (1.0 + (-head.array()).exp());
  // The sigmoid saturates to exactly 0 or 1 in floating point; nudge back
  // inside the open interval the output contract promises.
  const double top = std::nextafter(2.0 * M_PI, 0.0);
  const double bottom = std::nextafter(0.0, 1.0);
  trace.phase = trace.phase.cwiseMin(top).cwiseMax(bottom);
  return trace.phase;
}

RealImage decoder_forward(const SeedTensor& seed, const DecoderWeights& weights,
                          const DecoderConfig& config, const Grid2D& grid) {
  if (grid.width != config.output_side || grid.height != config.output_side) {
    throw std::invalid_argument("decoder_forward: grid does not match output side");
  }
  DecoderTrace trace;
  const Eigen::VectorXd& phase = decoder_forward_trace(seed, weights, config, trace);
  RealImage image(grid);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    image.values[i] = phase(static_cast<Eigen::Index>(i));
  }
  return image;
}

void decoder_backward(const DecoderTrace& trace, const DecoderWeights& weights,
                      const DecoderConfig& config, const Eigen::VectorXd& phase_grad,
                      DecoderGradients& grads) {
  const int d = config.layers;
  if (grads.mix.size() != static_cast<std::size_t>(d)) grads.resize(config);

  // Head: phase = 2*pi*sigmoid(h) => dphase/dh = phase * (2*pi - phase) / (2*pi).
  const Eigen::VectorXd head_grad =
      (phase_grad.array() * trace.phase.array() * (2.0 * M_PI - trace.phase.array()) /
       (2.0 * M_PI))
          .matrix();
  grads.out.noalias() += trace.input[d].transpose() * head_grad;
  Eigen::MatrixXd g = head_grad * weights.out.transpose();

  int side = config.output_side;
  for (int i = d - 1; i >= 0; --i) {
    const Eigen::MatrixXd& xhat = trace.normalized[i];
    const auto pixels = static_cast<double>(xhat.rows());

    // Affine part of channel normalization.
    grads.cn_scale[i].noalias() += (g.array() * xhat.array()).colwise().sum().matrix().transpose();
    grads.cn_bias[i].noalias() += g.colwise().sum().transpose();
    g.array().rowwise() *= weights.cn_scale[i].transpose().array();

    // Standardization: dx = inv_std * (g - mean(g) - xhat * mean(g .* xhat)).
    const Eigen::RowVectorXd mean_g = g.colwise().sum() / pixels;
    const Eigen::RowVectorXd mean_gx = (g.array() * xhat.array()).colwise().sum() / pixels;
    g.array() -= (xhat.array().rowwise() * mean_gx.array());
    g.rowwise() -= mean_g;
    g.array().rowwise() *= trace.inv_std[i].array();

    // ReLU mask from the cached pre-activation.
    g = (trace.pre_relu[i].array() > 0.0).select(g, 0.0);

    if (i < d - 1) {
      g = bilinear_upsample_adjoint(g, side, config.upsample_factor);
      side /= config.upsample_factor;
    }

    grads.mix[i].noalias() += trace.input[i].transpose() * g;
    if (i > 0) g = (g * weights.mix[i].transpose()).eval();
  }
}

void save_decoder_weights(const std::filesystem::path& path, const DecoderConfig& config,
                          const DecoderWeights& weights) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_decoder_weights: cannot open " + path.string());
  write_u32(os, kCheckpointMagic);
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(config.channels));
  write_u32(os, static_cast<std::uint32_t>(config.seed_side));
  write_u32(os, static_cast<std::uint32_t>(config.output_side));
  write_u32(os, static_cast<std::uint32_t>(config.layers));
  write_u32(os, static_cast<std::uint32_t>(config.upsample_factor));
  write_u32(os, 0);  // reserved, keeps the header 8-byte aligned
  write_u64(os, config.rng_seed);
  for (const auto& m : weights.mix) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
    }
  }
  for (Eigen::Index i = 0; i < weights.out.size(); ++i) write_f64(os, weights.out(i));
  for (const auto& v : weights.cn_bias) {
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(os, v(i));
  }
  for (const auto& v : weights.cn_scale) {
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(os, v(i));
  }
  if (!os) throw std::runtime_error("save_decoder_weights: write failed for " + path.string());
}

std::pair<DecoderConfig, DecoderWeights> load_decoder_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_decoder_weights: cannot open " + path.string());
  if (read_u32(is) != kCheckpointMagic) {
    throw std::runtime_error("load_decoder_weights: bad magic in " + path.string());
  }
  if (read_u32(is) != kCheckpointVersion) {
    throw std::runtime_error("load_decoder_weights: unsupported version in " + path.string());
  }
  DecoderConfig config;
  config.channels = static_cast<int>(read_u32(is));
  config.seed_side = static_cast<int>(read_u32(is));
  config.output_side = static_cast<int>(read_u32(is));
  config.layers = static_cast<int>(read_u32(is));
  config.upsample_factor = static_cast<int>(read_u32(is));
  read_u32(is);  // reserved
  config.rng_seed = read_u64(is);
  config.validate();

  DecoderWeights weights;
  weights.mix.resize(static_cast<std::size_t>(config.layers));
  for (auto& m : weights.mix) {
    m.resize(config.channels, config.channels);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f64(is);
    }
  }
  weights.out.resize(config.channels);
  for (Eigen::Index i = 0; i < weights.out.size(); ++i) weights.out(i) = read_f64(is);
  weights.cn_bias.assign(static_cast<std::size_t>(config.layers),
                         Eigen::VectorXd(config.channels));
  for (auto& v : weights.cn_bias) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_f64(is);
  }
  weights.cn_scale.assign(static_cast<std::size_t>(config.layers),
                          Eigen::VectorXd(config.channels));
  for (auto& v : weights.cn_scale) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_f64(is);
  }
  if (!is) throw std::runtime_error("load_decoder_weights: truncated file " + path.string());
  return {config, std::move(weights)};
}

}  // namespace dpd
