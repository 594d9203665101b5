#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polab/config.hpp"

namespace polab {

struct RunSummary {
  /// Trailing moving-average accuracy at the last step.
  double final_accuracy = 0.0;
  double mean_kl_ref = 0.0;
  double mean_response_length = 0.0;
  double mean_ds_overhead = 0.0;
  double surrogate_variance = 0.0;
};

RunSummary summarize(std::span<const MetricsRecord> records, std::size_t moving_average_window);

struct SweepCell {
  nlohmann::json value;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  bool ok = false;
  std::string error;
  RunSummary summary;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  nlohmann::json summary;
  bool all_ok() const;
};

/// Directory name for one cell, e.g. "group_size=4/seed_2".
std::filesystem::path cell_dir(SweepAxis axis, const nlohmann::json& value, std::uint64_t seed);

/// Runs every (value, seed) cell, spec.jobs at a time. Each cell gets config.json,
/// metrics.csv and metrics.jsonl; summary.json is written after all cells settle.
SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

/// One run into `dir`: config.json plus streamed metrics.
std::vector<MetricsRecord> run_to_dir(const TrainConfig& cfg, const std::filesystem::path& dir);

}  // namespace polab
