#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polab/advantage.hpp"
#include "polab/config.hpp"
#include "polab/envs/bandit.hpp"
#include "polab/envs/countdown.hpp"
#include "polab/envs/toy.hpp"
#include "polab/metrics_io.hpp"
#include "polab/objectives.hpp"
#include "polab/trainer.hpp"

namespace py = pybind11;
using namespace polab;

namespace {

std::vector<std::uint32_t> ids(const TokenSeq& seq) {
  std::vector<std::uint32_t> out;
  for (auto t : seq) out.push_back(t.id);
  return out;
}

TokenSeq tokens(const std::vector<std::uint32_t>& xs) {
  TokenSeq out;
  for (auto x : xs) out.push_back(Token{x});
  return out;
}

py::dict record_dict(const MetricsRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["mean_reward"] = r.mean_reward;
  d["accuracy"] = r.accuracy;
  d["mean_entropy"] = r.mean_entropy;
  d["approx_kl_old"] = r.approx_kl_old;
  d["approx_kl_ref"] = r.approx_kl_ref;
  d["clip_fraction"] = r.clip_fraction;
  d["mean_response_length"] = r.mean_response_length;
  d["surrogate_objective"] = r.surrogate_objective;
  d["grad_norm"] = r.grad_norm;
  d["ds_overhead_fraction"] = r.ds_overhead_fraction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_polab, m) {
  m.doc() = "Policy-optimization lab: objectives, advantages, environments and the trainer.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("gae", [](const std::vector<double>& rewards, std::vector<double> values, double gamma, double lam) {
    if (values.size() == rewards.size()) values.push_back(0.0);
    return gae(td_errors(rewards, values, gamma), gamma, lam);
  }, py::arg("rewards"), py::arg("values"), py::arg("gamma") = 1.0, py::arg("lam") = 0.95,
     "GAE advantages; `values` may omit the terminal bootstrap (taken as 0).");
  m.def("td_errors", [](const std::vector<double>& r, const std::vector<double>& v, double gamma) {
    return td_errors(r, v, gamma);
  }, py::arg("rewards"), py::arg("values"), py::arg("gamma") = 1.0);
  m.def("group_relative_advantages", [](const std::vector<double>& rewards, double eps_std) {
    return group_relative_advantages(rewards, GroupAdvConfig{eps_std});
  }, py::arg("rewards"), py::arg("eps_std") = 1e-6);
  m.def("whiten", [](const std::vector<double>& a) { return whiten(a); });

  m.def("clip_ratio", [](double r, double lo, double hi) { return clip_ratio(r, ClipRange{lo, hi}); },
        py::arg("ratio"), py::arg("eps_low") = 0.2, py::arg("eps_high") = 0.2);
  m.def("ppo_token_objective",
        [](double r, double a, double lo, double hi) { return ppo_token_objective(r, a, ClipRange{lo, hi}); },
        py::arg("ratio"), py::arg("adv"), py::arg("eps_low") = 0.2, py::arg("eps_high") = 0.2);
  m.def("kl_estimate_k3", &kl_estimate_k3, py::arg("logp_theta"), py::arg("logp_ref"));
  m.def("aggregation_weights", [](const std::string& mode, const std::vector<std::size_t>& lengths) {
    return aggregation_weights(aggregation_mode_from_string(mode), lengths);
  }, py::arg("mode"), py::arg("lengths"));

  m.def("toy_policy_quality", &toy_policy_quality, py::arg("theta"), py::arg("x"));

  m.def("countdown_solutions", [](const std::vector<int>& numbers, int target) {
    std::vector<std::string> out;
    for (const auto& e : countdown::enumerate_solutions(CountdownInstance{numbers, target}))
      out.push_back(countdown::to_infix(*e));
    return out;
  }, py::arg("numbers"), py::arg("target"));
  m.def("countdown_tokenize", [](const std::string& text, const std::vector<int>& numbers, int target) {
    return ids(countdown::tokenize(text, CountdownInstance{numbers, target}));
  }, py::arg("text"), py::arg("numbers"), py::arg("target"));
  m.def("countdown_reward", [](const std::vector<std::uint32_t>& response, const std::vector<int>& numbers,
                               int target, double w_format, double w_correct) {
    const auto r = countdown::countdown_reward(CountdownInstance{numbers, target}, tokens(response),
                                               countdown::RewardWeights{w_format, w_correct});
    py::dict d;
    d["reward"] = r.reward;
    d["format_ok"] = r.format_ok;
    d["correct"] = r.correct;
    return d;
  }, py::arg("response"), py::arg("numbers"), py::arg("target"), py::arg("w_format") = 0.1,
     py::arg("w_correct") = 1.0);

  m.def("bandit_optimum", [](std::uint64_t seed, std::size_t vocab, std::size_t horizon) {
    const auto opt = bandit::bandit_optimum(bandit::make_bandit_table(seed, vocab, horizon));
    return py::make_tuple(ids(opt.sequence), opt.reward);
  }, py::arg("seed"), py::arg("vocab_size") = 4, py::arg("horizon") = 3);

  m.def("validate_config", [](const std::string& text) {
    const auto parsed = parse_config(nlohmann::json::parse(text));
    if (const auto* cfg = std::get_if<TrainConfig>(&parsed)) return to_json(*cfg).dump();
    return to_json(std::get<SweepSpec>(parsed).base).dump();
  }, py::arg("config_json"), "Parse a JSON config string; returns the materialized config as JSON text.");

  m.def("train", [](const std::string& text) {
    const TrainConfig cfg = parse_train_config(nlohmann::json::parse(text));
    std::vector<MetricsRecord> records;
    {
      py::gil_scoped_release release;
      records = polab::train(cfg);
    }
    py::list out;
    for (const auto& r : records) out.append(record_dict(r));
    return out;
  }, py::arg("config_json"), "Run training from a JSON config string; returns one dict per step.");

  m.attr("METRICS_CSV_HEADER") = kMetricsCsvHeader;
}
