#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "polab/trainer.hpp"

namespace polab {

/// Thrown for missing files, malformed JSON, unknown keys and invalid values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SweepAxis { group_size, beta, entropy_coeff, learning_rate, ds_enabled, aggregation_mode, clip_high };

const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepSpec {
  TrainConfig base;
  SweepAxis axis = SweepAxis::group_size;
  std::vector<nlohmann::json> values;
  std::vector<std::uint64_t> seeds;
  /// Cells run at once.
  std::size_t jobs = 1;
};

using ParsedConfig = std::variant<TrainConfig, SweepSpec>;

/// A document with "axis" is a sweep; anything else is a single run.
ParsedConfig parse_config(const nlohmann::json& doc);
ParsedConfig parse_config(const std::filesystem::path& path);

TrainConfig parse_train_config(const nlohmann::json& doc);
SweepSpec parse_sweep_spec(const nlohmann::json& doc);

/// Full materialized form; parse_train_config(to_json(c)) reproduces c.
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const MetricsRecord& rec);

/// Sets the swept field; throws ConfigError if the value has the wrong type or the
/// result fails validation.
TrainConfig apply_axis(TrainConfig cfg, SweepAxis axis, const nlohmann::json& value);

/// Human-readable key reference for --help.
std::string config_reference();

}  // namespace polab
