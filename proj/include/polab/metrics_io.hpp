#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>

#include "polab/trainer.hpp"

namespace polab {

inline constexpr const char* kMetricsCsvHeader =
    "step,mean_reward,accuracy,mean_entropy,approx_kl_old,approx_kl_ref,clip_fraction,"
    "mean_response_length,surrogate_objective,grad_norm,ds_overhead_fraction";

/// Shortest round-trip decimal form.
std::string format_double(double x);

std::string csv_row(const MetricsRecord& rec);
void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);
void write_metrics_jsonl(const std::filesystem::path& path, std::span<const MetricsRecord> records);

/// Streams rows as they arrive, flushing after each one.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& dir);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void append(const MetricsRecord& rec);

 private:
  struct Files;
  std::unique_ptr<Files> files_;
};

}  // namespace polab
