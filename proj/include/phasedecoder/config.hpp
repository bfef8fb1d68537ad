#ifndef PHASEDECODER_CONFIG_HPP
#define PHASEDECODER_CONFIG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "phasedecoder/decoder.hpp"
#include "phasedecoder/field.hpp"
#include "phasedecoder/sim.hpp"
#include "phasedecoder/solvers.hpp"

namespace dpd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One human-readable JSON document per run; every field optional with the
/// defaults below. Unknown keys are rejected with an error naming the key,
/// and load-then-save round-trips to semantic equality.
struct RunConfig {
  Grid2D grid{128, 128, 0.1625, 0.514};
  double na = 0.65;
  int zernike_modes = 9;
  TargetSpec target;
  std::vector<double> defocus_um{4.0, 8.0, 16.0, 32.0};
  NoiseSpec noise;
  DecoderConfig decoder{32, 8, 128, 5, 2, 20240101};
  RmsPropConfig rmsprop;
  WirtingerConfig wirtinger;

  bool operator==(const RunConfig&) const;
};

RunConfig default_run_config();

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

std::string target_kind_name(TargetKind kind);
TargetKind target_kind_from_name(const std::string& name);
std::string noise_model_name(NoiseModel model);
NoiseModel noise_model_from_name(const std::string& name);

}  // namespace dpd

#endif
