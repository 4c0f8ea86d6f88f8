#pragma once

#include <json.hpp>

#include "cathseg/augment.hpp"
#include "cathseg/centerline.hpp"
#include "cathseg/nn/model.hpp"
#include "cathseg/nn/optimizer.hpp"
#include "cathseg/synthgen.hpp"

namespace cathseg::detail {

nlohmann::ordered_json to_json(const SynthConfig& c);
nlohmann::ordered_json to_json(const AugmentConfig& c);
nlohmann::ordered_json to_json(const ExtractParams& c);
nlohmann::ordered_json to_json(const nn::ModelConfig& c);
nlohmann::ordered_json to_json(const nn::SgdSettings& c);

/// Strict readers: unknown keys and wrong types raise ConfigError naming `where`.
void from_json(const nlohmann::json& j, const std::string& where, SynthConfig& c);
void from_json(const nlohmann::json& j, const std::string& where, AugmentConfig& c);
void from_json(const nlohmann::json& j, const std::string& where, ExtractParams& c);
void from_json(const nlohmann::json& j, const std::string& where, nn::ModelConfig& c);
void from_json(const nlohmann::json& j, const std::string& where, nn::SgdSettings& c);

}  // namespace cathseg::detail
