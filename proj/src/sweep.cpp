#include "polab/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "polab/metrics_io.hpp"

namespace polab {

using nlohmann::json;

RunSummary summarize(std::span<const MetricsRecord> records, std::size_t moving_average_window) {
  RunSummary s;
  if (records.empty()) return s;
  std::vector<double> acc;
  double surrogate_mean = 0.0;
  for (const auto& r : records) {
    acc.push_back(r.accuracy);
    s.mean_kl_ref += r.approx_kl_ref;
    s.mean_response_length += r.mean_response_length;
    s.mean_ds_overhead += r.ds_overhead_fraction;
    surrogate_mean += r.surrogate_objective;
  }
  const double n = static_cast<double>(records.size());
  s.final_accuracy = moving_average(acc, moving_average_window).back();
  s.mean_kl_ref /= n;
  s.mean_response_length /= n;
  s.mean_ds_overhead /= n;
  surrogate_mean /= n;
  for (const auto& r : records) s.surrogate_variance += (r.surrogate_objective - surrogate_mean) * (r.surrogate_objective - surrogate_mean);
  s.surrogate_variance /= n;
  return s;
}

bool SweepResult::all_ok() const {
  for (const auto& c : cells)
    if (!c.ok) return false;
  return true;
}

std::filesystem::path cell_dir(SweepAxis axis, const json& value, std::uint64_t seed) {
  std::string v = value.is_string() ? value.get<std::string>() : value.dump();
  return std::filesystem::path(std::string(to_string(axis)) + "=" + v) / ("seed_" + std::to_string(seed));
}

std::vector<MetricsRecord> run_to_dir(const TrainConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    out << to_json(cfg).dump(2) << '\n';
  }
  MetricsWriter writer(dir);
  Trainer trainer(cfg);
  return trainer.run([&](const MetricsRecord& rec, const Trainer&) { writer.append(rec); });
}

namespace {

json stats(const std::vector<double>& xs) {
  if (xs.empty()) return json{{"mean", nullptr}, {"std", nullptr}};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return json{{"mean", mean}, {"std", std::sqrt(var)}};
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir) {
  SweepResult result;
  for (const auto& v : spec.values)
    for (auto seed : spec.seeds) {
      SweepCell cell;
      cell.value = v;
      cell.seed = seed;
      cell.dir = out_dir / cell_dir(spec.axis, v, seed);
      result.cells.push_back(std::move(cell));
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      auto& cell = result.cells[i];
      try {
        TrainConfig cfg = apply_axis(spec.base, spec.axis, cell.value);
        cfg.seed = cell.seed;
        const auto records = run_to_dir(cfg, cell.dir);
        cell.summary = summarize(records, cfg.moving_average_window);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(spec.jobs, result.cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json per_value = json::array();
  for (const auto& v : spec.values) {
    std::vector<double> acc, kl, len, ds;
    json failures = json::array();
    for (const auto& c : result.cells) {
      if (c.value != v) continue;
      if (!c.ok) {
        failures.push_back({{"seed", c.seed}, {"error", c.error}});
        continue;
      }
      acc.push_back(c.summary.final_accuracy);
      kl.push_back(c.summary.mean_kl_ref);
      len.push_back(c.summary.mean_response_length);
      ds.push_back(c.summary.mean_ds_overhead);
    }
    json entry{{"value", v},
               {"completed", acc.size()},
               {"final_accuracy", stats(acc)},
               {"mean_kl_ref", stats(kl)},
               {"mean_response_length", stats(len)},
               {"ds_overhead_fraction", stats(ds)}};
    if (!failures.empty()) entry["failures"] = failures;
    per_value.push_back(entry);
  }
  result.summary = json{{"axis", to_string(spec.axis)},
                        {"seeds", spec.seeds},
                        {"cells", result.cells.size()},
                        {"values", per_value}};
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "summary.json", std::ios::trunc);
  out << result.summary.dump(2) << '\n';
  return result;
}

}  // namespace polab
