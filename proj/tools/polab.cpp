#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "polab/config.hpp"
#include "polab/envs/bandit.hpp"
#include "polab/envs/countdown.hpp"
#include "polab/envs/toy.hpp"
#include "polab/metrics_io.hpp"
#include "polab/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polab;

namespace {

fs::path default_out_root() {
  if (const char* env = std::getenv("POLAB_OUT_DIR"); env && *env) return env;
  return "runs";
}

std::vector<int> parse_numbers(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number: " + item);
    out.push_back(v);
  }
  return out;
}

json token_ids(const TokenSeq& seq) {
  json a = json::array();
  for (auto t : seq) a.push_back(t.id);
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polab: policy-optimization lab (ppo, grpo, dapo, vpg) on small verifiable tasks"};
  app.require_subcommand(1);
  app.footer(config_reference());

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::string out_dir;
  bool deterministic = false;

  auto* train = app.add_subcommand("train", "Run one training job; writes metrics.csv, metrics.jsonl, config.json");
  train->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = train->add_option("--seed", seed, "Override the seed");
  auto* steps_opt = train->add_option("--steps", steps, "Override the number of steps");
  train->add_option("--out", out_dir, "Output directory (default $POLAB_OUT_DIR/<algorithm>_<env>_seed<N>)");
  train->add_flag("--deterministic", deterministic, "Single-threaded rollouts");

  std::string sweep_config;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run every (value, seed) cell of a sweep spec");
  sweep->add_option("--config", sweep_config, "JSON sweep spec")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "Output directory (default $POLAB_OUT_DIR/sweep_<axis>)");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate-config", "Parse and validate a config; prints the materialized form");
  validate_cmd->add_option("config", validate_path, "JSON config or sweep spec")->required();

  auto* oracle = app.add_subcommand("oracle", "Brute-force reference answers as JSON");
  oracle->require_subcommand(1);
  std::string numbers;
  int target = 0;
  auto* oc = oracle->add_subcommand("countdown", "All solutions of an instance");
  oc->add_option("--numbers", numbers, "Comma-separated numbers, e.g. 2,3,4")->required();
  oc->add_option("--target", target, "Target value")->required();
  std::uint64_t bandit_seed = 7;
  std::size_t bandit_v = 4, bandit_t = 3;
  auto* ob = oracle->add_subcommand("bandit", "Optimum of a sequence-bandit table");
  ob->add_option("--seed", bandit_seed, "Table seed")->required();
  ob->add_option("--vocab", bandit_v, "Vocabulary size")->capture_default_str();
  ob->add_option("--horizon", bandit_t, "Sequence length")->capture_default_str();
  double theta = 0.0, x = 0.0;
  auto* ot = oracle->add_subcommand("toy-policy", "Toy policy quality at (theta, x)");
  ot->add_option("--theta", theta)->required();
  ot->add_option("--x", x)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto parsed = parse_config(fs::path(config_path));
      if (!std::holds_alternative<TrainConfig>(parsed)) {
        std::cerr << "error: " << config_path << " is a sweep spec; use `polab sweep`\n";
        return 2;
      }
      TrainConfig cfg = std::get<TrainConfig>(parsed);
      if (*seed_opt) cfg.seed = seed;
      if (*steps_opt) cfg.steps = steps;
      if (deterministic) cfg.workers = 1;
      validate(cfg);
      const fs::path dir = out_dir.empty()
          ? default_out_root() / (std::string(to_string(cfg.algorithm)) + "_" + to_string(cfg.env) + "_seed" +
                                  std::to_string(cfg.seed))
          : fs::path(out_dir);
      const auto records = run_to_dir(cfg, dir);
      const auto s = summarize(records, cfg.moving_average_window);
      const auto& last = records.back();
      std::cout << "done steps=" << records.size() << " accuracy=" << format_double(last.accuracy)
                << " mean_reward=" << format_double(last.mean_reward)
                << " final_ma_accuracy=" << format_double(s.final_accuracy)
                << " approx_kl_ref=" << format_double(last.approx_kl_ref) << " out=" << dir.string() << "\n";
      return 0;
    }
    if (*sweep) {
      auto parsed = parse_config(fs::path(sweep_config));
      if (!std::holds_alternative<SweepSpec>(parsed)) {
        std::cerr << "error: " << sweep_config << " has no \"axis\"; use `polab train`\n";
        return 2;
      }
      const auto& spec = std::get<SweepSpec>(parsed);
      const fs::path dir = sweep_out.empty() ? default_out_root() / (std::string("sweep_") + to_string(spec.axis))
                                             : fs::path(sweep_out);
      const auto result = run_sweep(spec, dir);
      std::size_t ok = 0;
      for (const auto& c : result.cells) {
        if (c.ok) {
          ++ok;
        } else {
          std::cerr << "cell " << c.dir.string() << " failed: " << c.error << "\n";
        }
      }
      std::cout << "sweep " << to_string(spec.axis) << ": " << ok << "/" << result.cells.size()
                << " cells completed; summary " << (dir / "summary.json").string() << "\n";
      return result.all_ok() ? 0 : 1;
    }
    if (*validate_cmd) {
      auto parsed = parse_config(fs::path(validate_path));
      if (const auto* cfg = std::get_if<TrainConfig>(&parsed)) {
        std::cout << to_json(*cfg).dump(2) << "\n";
      } else {
        const auto& spec = std::get<SweepSpec>(parsed);
        std::cout << json{{"base", to_json(spec.base)},
                          {"axis", to_string(spec.axis)},
                          {"values", spec.values},
                          {"seeds", spec.seeds},
                          {"jobs", spec.jobs}}
                         .dump(2)
                  << "\n";
      }
      return 0;
    }
    if (*oc) {
      CountdownInstance inst{parse_numbers(numbers), target};
      const countdown::Vocabulary vocab(inst.numbers.size());
      json sols = json::array();
      for (const auto& e : countdown::enumerate_solutions(inst))
        sols.push_back({{"infix", countdown::to_infix(*e)},
                        {"sexpr", countdown::to_sexpr(*e)},
                        {"tokens", token_ids(countdown::serialize(*e, vocab))}});
      std::cout << json{{"numbers", inst.numbers}, {"target", inst.target}, {"count", sols.size()}, {"solutions", sols}}
                       .dump(2)
                << "\n";
      return 0;
    }
    if (*ob) {
      const auto table = bandit::make_bandit_table(bandit_seed, bandit_v, bandit_t);
      const auto opt = bandit::bandit_optimum(table);
      std::cout << json{{"seed", bandit_seed},
                        {"vocab_size", bandit_v},
                        {"horizon", bandit_t},
                        {"optimum", token_ids(opt.sequence)},
                        {"value", opt.reward}}
                       .dump(2)
                << "\n";
      return 0;
    }
    if (*ot) {
      std::cout << json{{"theta", theta}, {"x", x}, {"quality", toy_policy_quality(theta, x)}}.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
