#include "cathseg/cli/config.hpp"

#include <set>

#include "cathseg/errors.hpp"
#include "cathseg/image_io.hpp"
#include "detail/json_config.hpp"

namespace cathseg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Reads the keys of one JSON object and rejects whatever was not read.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  void read(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) fail(key, "an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  /// Returns the sub-object under `key`, if present.
  const json* object(const char* key) { return take(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key \"" + it.key() + "\"");
  }
  const std::string& where() const { return where_; }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError(where_ + "." + key + ": expected " + what);
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename F>
void checked(const std::string& where, F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

namespace detail {

ordered_json to_json(const SynthConfig& c) {
  return {{"image_size", c.image_size},
          {"frames_per_seq", c.frames_per_seq},
          {"control_points_min", c.control_points_min},
          {"control_points_max", c.control_points_max},
          {"motion_px", c.motion_px},
          {"intensity_min", c.intensity_min},
          {"intensity_max", c.intensity_max},
          {"profile_sigma", c.profile_sigma},
          {"background_texture_scale", c.background_texture_scale},
          {"noise_sigma", c.noise_sigma},
          {"loop_probability", c.loop_probability},
          {"seed", c.seed}};
}

ordered_json to_json(const AugmentConfig& c) {
  return {{"p_augment", c.p_augment},
          {"p_flip", c.p_flip},
          {"rot_deg", c.rot_deg},
          {"scale_min", c.scale_min},
          {"scale_max", c.scale_max},
          {"translate_frac", c.translate_frac},
          {"intensity_shift", c.intensity_shift},
          {"noise_sigma", c.noise_sigma}};
}

ordered_json to_json(const ExtractParams& c) {
  return {{"alpha", c.alpha}, {"d_max", c.d_max}, {"d_max2", c.d_max2}, {"b_min", c.b_min}};
}

ordered_json to_json(const nn::ModelConfig& c) {
  return {{"input_frames", c.input_frames},       {"levels", c.levels},
          {"base_filters", c.base_filters},       {"convs_per_block", c.convs_per_block},
          {"dropout_rate", c.dropout_rate},       {"dropout_blocks", c.dropout_blocks}};
}

ordered_json to_json(const nn::SgdSettings& c) {
  return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay}, {"momentum", c.momentum}};
}

void from_json(const json& j, const std::string& where, SynthConfig& c) {
  Fields f(j, where);
  f.read("image_size", c.image_size);
  f.read("frames_per_seq", c.frames_per_seq);
  f.read("control_points_min", c.control_points_min);
  f.read("control_points_max", c.control_points_max);
  f.read("motion_px", c.motion_px);
  f.read("intensity_min", c.intensity_min);
  f.read("intensity_max", c.intensity_max);
  f.read("profile_sigma", c.profile_sigma);
  f.read("background_texture_scale", c.background_texture_scale);
  f.read("noise_sigma", c.noise_sigma);
  f.read("loop_probability", c.loop_probability);
  f.read("seed", c.seed);
  f.finish();
  checked(where, [&] { c.validate(); });
}

void from_json(const json& j, const std::string& where, AugmentConfig& c) {
  Fields f(j, where);
  f.read("p_augment", c.p_augment);
  f.read("p_flip", c.p_flip);
  f.read("rot_deg", c.rot_deg);
  f.read("scale_min", c.scale_min);
  f.read("scale_max", c.scale_max);
  f.read("translate_frac", c.translate_frac);
  f.read("intensity_shift", c.intensity_shift);
  f.read("noise_sigma", c.noise_sigma);
  f.finish();
  checked(where, [&] { c.validate(); });
}

void from_json(const json& j, const std::string& where, ExtractParams& c) {
  Fields f(j, where);
  f.read("alpha", c.alpha);
  f.read("d_max", c.d_max);
  f.read("d_max2", c.d_max2);
  f.read("b_min", c.b_min);
  f.finish();
  checked(where, [&] { c.validate(); });
}

void from_json(const json& j, const std::string& where, nn::ModelConfig& c) {
  Fields f(j, where);
  f.read("input_frames", c.input_frames);
  f.read("levels", c.levels);
  f.read("base_filters", c.base_filters);
  f.read("convs_per_block", c.convs_per_block);
  f.read("dropout_rate", c.dropout_rate);
  f.read("dropout_blocks", c.dropout_blocks);
  f.finish();
  checked(where, [&] { c.validate(); });
}

void from_json(const json& j, const std::string& where, nn::SgdSettings& c) {
  Fields f(j, where);
  f.read("learning_rate", c.learning_rate);
  f.read("weight_decay", c.weight_decay);
  f.read("momentum", c.momentum);
  f.finish();
  checked(where, [&] { c.validate(); });
}

}  // namespace detail

namespace cli {

void RunConfig::validate() const {
  checked("model", [&] { model.validate(); });
  checked("optimizer", [&] { optimizer.validate(); });
  checked("augment", [&] { augment.validate(); });
  checked("extract", [&] { extract.validate(); });
  checked("synth", [&] { synth.validate(); });
  if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(evaluate.threshold_mm > 0.0)) throw ConfigError("evaluate.threshold_mm must be > 0");
  checked("pixel_spacing", [&] { PixelSpacing{pixel_spacing}; });
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Fields f(j, "config");
  if (const json* v = f.object("model")) detail::from_json(*v, "model", c.model);
  if (const json* v = f.object("optimizer")) detail::from_json(*v, "optimizer", c.optimizer);
  if (const json* v = f.object("augment")) detail::from_json(*v, "augment", c.augment);
  if (const json* v = f.object("extract")) detail::from_json(*v, "extract", c.extract);
  if (const json* v = f.object("synth")) detail::from_json(*v, "synth", c.synth);
  if (const json* v = f.object("train")) {
    Fields t(*v, "train");
    t.read("epochs", c.train.epochs);
    t.read("batch_size", c.train.batch_size);
    t.read("augment", c.train.augment);
    t.read("seed", c.train.seed);
    t.finish();
  }
  if (const json* v = f.object("evaluate")) {
    Fields e(*v, "evaluate");
    e.read("threshold_mm", c.evaluate.threshold_mm);
    e.finish();
  }
  if (const json* v = f.object("paths")) {
    Fields p(*v, "paths");
    p.read("data", c.paths.data);
    p.read("checkpoint", c.paths.checkpoint);
    p.read("output", c.paths.output);
    p.finish();
  }
  f.read("pixel_spacing", c.pixel_spacing);
  f.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_run_config(text);
}

std::string run_config_json(const RunConfig& c) {
  ordered_json j;
  j["model"] = detail::to_json(c.model);
  j["optimizer"] = detail::to_json(c.optimizer);
  j["augment"] = detail::to_json(c.augment);
  j["extract"] = detail::to_json(c.extract);
  j["synth"] = detail::to_json(c.synth);
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"augment", c.train.augment},
                {"seed", c.train.seed}};
  j["evaluate"] = {{"threshold_mm", c.evaluate.threshold_mm}};
  j["paths"] = {{"data", c.paths.data}, {"checkpoint", c.paths.checkpoint}, {"output", c.paths.output}};
  j["pixel_spacing"] = c.pixel_spacing;
  return j.dump(2) + "\n";
}

}  // namespace cli
}  // namespace cathseg
