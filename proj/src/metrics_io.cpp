#include "polab/metrics_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "polab/config.hpp"

namespace polab {

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

std::string csv_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.step);
  for (double x : {r.mean_reward, r.accuracy, r.mean_entropy, r.approx_kl_old, r.approx_kl_ref, r.clip_fraction,
                   r.mean_response_length, r.surrogate_objective, r.grad_norm, r.ds_overhead_fraction}) {
    row += ',';
    row += format_double(x);
  }
  return row;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : records) out << csv_row(r) << '\n';
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
  auto out = open_out(path);
  write_metrics_csv(out, records);
}

void write_metrics_jsonl(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
  auto out = open_out(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

struct MetricsWriter::Files {
  std::ofstream csv;
  std::ofstream jsonl;
};

MetricsWriter::MetricsWriter(const std::filesystem::path& dir) : files_(std::make_unique<Files>()) {
  std::filesystem::create_directories(dir);
  files_->csv = open_out(dir / "metrics.csv");
  files_->jsonl = open_out(dir / "metrics.jsonl");
  files_->csv << kMetricsCsvHeader << '\n' << std::flush;
}

MetricsWriter::~MetricsWriter() = default;

void MetricsWriter::append(const MetricsRecord& rec) {
  files_->csv << csv_row(rec) << '\n' << std::flush;
  files_->jsonl << to_json(rec).dump() << '\n' << std::flush;
}

}  // namespace polab
