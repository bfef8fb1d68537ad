#include "phasedecoder/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

namespace dpd {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& scope) {
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown config key \"" + (scope.empty() ? key : scope + "." + key) +
                        "\"");
    }
  }
}

template <class T>
void read_field(const json& object, const char* key, T& target) {
  if (object.contains(key)) {
    try {
      target = object.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
  }
}

}  // namespace

bool RunConfig::operator==(const RunConfig& other) const {
  return grid == other.grid && na == other.na && zernike_modes == other.zernike_modes &&
         target.kind == other.target.kind && target.contrast == other.target.contrast &&
         target.feature_scale == other.target.feature_scale &&
         target.custom_path == other.target.custom_path && defocus_um == other.defocus_um &&
         noise.model == other.noise.model && noise.parameter == other.noise.parameter &&
         noise.rng_seed == other.noise.rng_seed && decoder.channels == other.decoder.channels &&
         decoder.seed_side == other.decoder.seed_side &&
         decoder.output_side == other.decoder.output_side &&
         decoder.layers == other.decoder.layers &&
         decoder.upsample_factor == other.decoder.upsample_factor &&
         decoder.rng_seed == other.decoder.rng_seed &&
         rmsprop.learning_rate == other.rmsprop.learning_rate &&
         rmsprop.decay == other.rmsprop.decay && rmsprop.epsilon == other.rmsprop.epsilon &&
         rmsprop.iterations == other.rmsprop.iterations &&
         rmsprop.log_every == other.rmsprop.log_every &&
         wirtinger.step_size == other.wirtinger.step_size &&
         wirtinger.iterations == other.wirtinger.iterations &&
         wirtinger.tolerance == other.wirtinger.tolerance &&
         wirtinger.log_every == other.wirtinger.log_every;
}

RunConfig default_run_config() { return RunConfig{}; }

std::string target_kind_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::Flat: return "flat";
    case TargetKind::DiskArray: return "disk-array";
    case TargetKind::BarGroups: return "bar-groups";
    case TargetKind::SiemensStar: return "siemens-star";
    case TargetKind::CustomFromFile: return "custom-from-file";
  }
  return "disk-array";
}

TargetKind target_kind_from_name(const std::string& name) {
  if (name == "flat") return TargetKind::Flat;
  if (name == "disk-array") return TargetKind::DiskArray;
  if (name == "bar-groups") return TargetKind::BarGroups;
  if (name == "siemens-star") return TargetKind::SiemensStar;
  if (name == "custom-from-file") return TargetKind::CustomFromFile;
  throw ConfigError("unknown target kind \"" + name + "\"");
}

std::string noise_model_name(NoiseModel model) {
  switch (model) {
    case NoiseModel::None: return "none";
    case NoiseModel::GaussianOnIntensity: return "gaussian-on-intensity";
    case NoiseModel::Poisson: return "poisson";
  }
  return "none";
}

NoiseModel noise_model_from_name(const std::string& name) {
  if (name == "none") return NoiseModel::None;
  if (name == "gaussian-on-intensity") return NoiseModel::GaussianOnIntensity;
  if (name == "poisson") return NoiseModel::Poisson;
  throw ConfigError("unknown noise model \"" + name + "\"");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");

  reject_unknown_keys(root, {"grid", "optics", "target", "defocus_um", "noise", "decoder",
                             "rmsprop", "wirtinger"},
                      "");

  RunConfig config;

  if (root.contains("grid")) {
    const json& g = root["grid"];
    reject_unknown_keys(g, {"width", "height", "pixel_size_um", "wavelength_um"}, "grid");
    int width = config.grid.width, height = config.grid.height;
    double pixel = config.grid.pixel_size, lambda = config.grid.wavelength;
    read_field(g, "width", width);
    read_field(g, "height", height);
    read_field(g, "pixel_size_um", pixel);
    read_field(g, "wavelength_um", lambda);
    try {
      config.grid = Grid2D(width, height, pixel, lambda);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }

  if (root.contains("optics")) {
    const json& o = root["optics"];
    reject_unknown_keys(o, {"na", "zernike_modes"}, "optics");
    read_field(o, "na", config.na);
    read_field(o, "zernike_modes", config.zernike_modes);
    if (config.zernike_modes < 1) throw ConfigError("optics.zernike_modes must be >= 1");
  }

  if (root.contains("target")) {
    const json& t = root["target"];
    reject_unknown_keys(t, {"kind", "contrast_rad", "feature_scale_px", "custom_path"}, "target");
    std::string kind = target_kind_name(config.target.kind);
    read_field(t, "kind", kind);
    config.target.kind = target_kind_from_name(kind);
    read_field(t, "contrast_rad", config.target.contrast);
    read_field(t, "feature_scale_px", config.target.feature_scale);
    std::string custom;
    read_field(t, "custom_path", custom);
    config.target.custom_path = custom;
    try {
      config.target.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("target: ") + e.what());
    }
  }

  read_field(root, "defocus_um", config.defocus_um);
  if (config.defocus_um.empty()) throw ConfigError("defocus_um must not be empty");

  if (root.contains("noise")) {
    const json& n = root["noise"];
    reject_unknown_keys(n, {"model", "parameter", "rng_seed"}, "noise");
    std::string model = noise_model_name(config.noise.model);
    read_field(n, "model", model);
    config.noise.model = noise_model_from_name(model);
    read_field(n, "parameter", config.noise.parameter);
    read_field(n, "rng_seed", config.noise.rng_seed);
    try {
      config.noise.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
  }

  if (root.contains("decoder")) {
    const json& d = root["decoder"];
    reject_unknown_keys(d, {"channels", "seed_side", "layers", "upsample_factor", "rng_seed"},
                        "decoder");
    read_field(d, "channels", config.decoder.channels);
    read_field(d, "seed_side", config.decoder.seed_side);
    read_field(d, "layers", config.decoder.layers);
    read_field(d, "upsample_factor", config.decoder.upsample_factor);
    read_field(d, "rng_seed", config.decoder.rng_seed);
  }
  // The decoder always renders at grid resolution.
  config.decoder.output_side = config.grid.width;

  if (root.contains("rmsprop")) {
    const json& r = root["rmsprop"];
    reject_unknown_keys(r, {"learning_rate", "decay", "epsilon", "iterations", "log_every"},
                        "rmsprop");
    read_field(r, "learning_rate", config.rmsprop.learning_rate);
    read_field(r, "decay", config.rmsprop.decay);
    read_field(r, "epsilon", config.rmsprop.epsilon);
    read_field(r, "iterations", config.rmsprop.iterations);
    read_field(r, "log_every", config.rmsprop.log_every);
    try {
      config.rmsprop.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("rmsprop: ") + e.what());
    }
  }

  if (root.contains("wirtinger")) {
    const json& w = root["wirtinger"];
    reject_unknown_keys(w, {"step_size", "iterations", "tolerance", "log_every"}, "wirtinger");
    read_field(w, "step_size", config.wirtinger.step_size);
    read_field(w, "iterations", config.wirtinger.iterations);
    read_field(w, "tolerance", config.wirtinger.tolerance);
    read_field(w, "log_every", config.wirtinger.log_every);
    try {
      config.wirtinger.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("wirtinger: ") + e.what());
    }
  }

  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string serialize_run_config(const RunConfig& config) {
  json root;
  root["grid"] = {{"width", config.grid.width},
                  {"height", config.grid.height},
                  {"pixel_size_um", config.grid.pixel_size},
                  {"wavelength_um", config.grid.wavelength}};
  root["optics"] = {{"na", config.na}, {"zernike_modes", config.zernike_modes}};
  root["target"] = {{"kind", target_kind_name(config.target.kind)},
                    {"contrast_rad", config.target.contrast},
                    {"feature_scale_px", config.target.feature_scale},
                    {"custom_path", config.target.custom_path.string()}};
  root["defocus_um"] = config.defocus_um;
  root["noise"] = {{"model", noise_model_name(config.noise.model)},
                   {"parameter", config.noise.parameter},
                   {"rng_seed", config.noise.rng_seed}};
  root["decoder"] = {{"channels", config.decoder.channels},
                     {"seed_side", config.decoder.seed_side},
                     {"layers", config.decoder.layers},
                     {"upsample_factor", config.decoder.upsample_factor},
                     {"rng_seed", config.decoder.rng_seed}};
  root["rmsprop"] = {{"learning_rate", config.rmsprop.learning_rate},
                     {"decay", config.rmsprop.decay},
                     {"epsilon", config.rmsprop.epsilon},
                     {"iterations", config.rmsprop.iterations},
                     {"log_every", config.rmsprop.log_every}};
  root["wirtinger"] = {{"step_size", config.wirtinger.step_size},
                       {"iterations", config.wirtinger.iterations},
                       {"tolerance", config.wirtinger.tolerance},
                       {"log_every", config.wirtinger.log_every}};
  return root.dump(2) + "\n";
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write config file " + path.string());
  os << serialize_run_config(config);
}

}  // namespace dpd
