#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "spe/geometry.hpp"
#include "spe/network.hpp"
#include "spe/shape_space.hpp"

namespace spe {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  FieldModel model;
  // Free-form echo of the settings that produced the model.
  nlohmann::json settings = nlohmann::json::object();
  // Maps input coordinates to model coordinates when the data was normalized.
  std::optional<NormalizeTransform> normalization;
  long long step = 0;
  double loss = 0.0;
  std::string timestamp;  // filled with the current UTC time on save when empty
};

// Layout: {format_version, config: {model, normalization, settings},
//          param_order, params, meta: {step, loss, timestamp}}.
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc, const std::string& source);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Throws FileFormatError on malformed files or an unknown format_version.
Checkpoint load_checkpoint(const std::string& path);

// Architecture only (no trainable values).
nlohmann::json model_architecture(const FieldModel& model);

nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const NormalizeTransform& transform);

struct ShapeSpaceFile {
  ShapeSpace space;
  nlohmann::json settings = nlohmann::json::object();
  std::string timestamp;
};

void save_shape_space(const std::string& path, const ShapeSpaceFile& file);
ShapeSpaceFile load_shape_space(const std::string& path);

std::string utc_timestamp();

}  // namespace spe
