#include "polab/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace polab {

using nlohmann::json;

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::group_size: return "group_size";
    case SweepAxis::beta: return "beta";
    case SweepAxis::entropy_coeff: return "entropy_coeff";
    case SweepAxis::learning_rate: return "learning_rate";
    case SweepAxis::ds_enabled: return "ds_enabled";
    case SweepAxis::aggregation_mode: return "aggregation_mode";
    case SweepAxis::clip_high: return "clip_high";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  for (auto a : {SweepAxis::group_size, SweepAxis::beta, SweepAxis::entropy_coeff, SweepAxis::learning_rate,
                 SweepAxis::ds_enabled, SweepAxis::aggregation_mode, SweepAxis::clip_high})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown sweep axis: " + name);
}

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw ConfigError("invalid field " + key + ": " + why);
}

double get_real(const json& v, const std::string& key) {
  if (!v.is_number()) invalid(key, "expected a number");
  return v.get<double>();
}

std::uint64_t get_uint(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) invalid(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  invalid(key, "expected a non-negative integer");
}

std::size_t get_size(const json& v, const std::string& key) { return static_cast<std::size_t>(get_uint(v, key)); }

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) invalid(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) invalid(key, "expected a string");
  return v.get<std::string>();
}

using Setter = std::function<void(TrainConfig&, const json&, const std::string&)>;

void apply_object(TrainConfig& cfg, const json& obj, const std::map<std::string, Setter>& setters,
                  const std::string& prefix) {
  if (!obj.is_object()) invalid(prefix.empty() ? "config" : prefix, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key: " + path);
    it->second(cfg, value, path);
  }
}

const std::map<std::string, Setter>& countdown_setters() {
  static const std::map<std::string, Setter> s = {
      {"k", [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.k = get_size(v, k); }},
      {"max_target",
       [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.max_target = static_cast<int>(get_uint(v, k)); }},
      {"num_prompts", [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.num_prompts = get_size(v, k); }},
      {"dataset_seed", [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.dataset_seed = get_uint(v, k); }},
      {"instances", [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.instances_path = get_string(v, k); }},
      {"format_weight", [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.weights.w_format = get_real(v, k); }},
      {"correct_weight", [](TrainConfig& c, const json& v, const std::string& k) { c.countdown.weights.w_correct = get_real(v, k); }},
  };
  return s;
}

const std::map<std::string, Setter>& bandit_setters() {
  static const std::map<std::string, Setter> s = {
      {"vocab_size", [](TrainConfig& c, const json& v, const std::string& k) { c.bandit.vocab_size = get_size(v, k); }},
      {"horizon", [](TrainConfig& c, const json& v, const std::string& k) { c.bandit.horizon = get_size(v, k); }},
      {"table_seed", [](TrainConfig& c, const json& v, const std::string& k) { c.bandit.table_seed = get_uint(v, k); }},
  };
  return s;
}

const std::map<std::string, Setter>& top_setters() {
  static const std::map<std::string, Setter> s = {
      // resolved before the rest; listed so they are not unknown
      {"algorithm", [](TrainConfig&, const json&, const std::string&) {}},
      {"env", [](TrainConfig&, const json&, const std::string&) {}},
      {"steps", [](TrainConfig& c, const json& v, const std::string& k) { c.steps = get_size(v, k); }},
      {"prompts_per_step", [](TrainConfig& c, const json& v, const std::string& k) { c.prompts_per_step = get_size(v, k); }},
      {"group_size", [](TrainConfig& c, const json& v, const std::string& k) { c.group_size = get_size(v, k); }},
      {"max_len", [](TrainConfig& c, const json& v, const std::string& k) { c.max_len = get_size(v, k); }},
      {"learning_rate", [](TrainConfig& c, const json& v, const std::string& k) { c.adam.learning_rate = get_real(v, k); }},
      {"adam_beta1", [](TrainConfig& c, const json& v, const std::string& k) { c.adam.beta1 = get_real(v, k); }},
      {"adam_beta2", [](TrainConfig& c, const json& v, const std::string& k) { c.adam.beta2 = get_real(v, k); }},
      {"adam_eps", [](TrainConfig& c, const json& v, const std::string& k) { c.adam.eps = get_real(v, k); }},
      {"gamma", [](TrainConfig& c, const json& v, const std::string& k) { c.gae.gamma = get_real(v, k); }},
      {"lambda", [](TrainConfig& c, const json& v, const std::string& k) { c.gae.lambda = get_real(v, k); }},
      {"clip_low", [](TrainConfig& c, const json& v, const std::string& k) { c.clip.eps_low = get_real(v, k); }},
      {"clip_high", [](TrainConfig& c, const json& v, const std::string& k) { c.clip.eps_high = get_real(v, k); }},
      {"value_coeff", [](TrainConfig& c, const json& v, const std::string& k) { c.coeffs.c1 = get_real(v, k); }},
      {"entropy_coeff", [](TrainConfig& c, const json& v, const std::string& k) { c.coeffs.c2 = get_real(v, k); }},
      {"beta", [](TrainConfig& c, const json& v, const std::string& k) { c.coeffs.beta = get_real(v, k); }},
      {"aggregation_mode",
       [](TrainConfig& c, const json& v, const std::string& k) {
         try {
           c.aggregation = aggregation_mode_from_string(get_string(v, k));
         } catch (const std::invalid_argument& e) {
           invalid(k, e.what());
         }
       }},
      {"ds_enabled", [](TrainConfig& c, const json& v, const std::string& k) { c.ds.enabled = get_bool(v, k); }},
      {"max_refill_rounds", [](TrainConfig& c, const json& v, const std::string& k) { c.ds.max_refill_rounds = get_size(v, k); }},
      {"eps_std", [](TrainConfig& c, const json& v, const std::string& k) { c.group_adv.eps_std = get_real(v, k); }},
      {"baseline",
       [](TrainConfig& c, const json& v, const std::string& k) {
         try {
           c.baseline = baseline_mode_from_string(get_string(v, k));
         } catch (const std::invalid_argument& e) {
           invalid(k, e.what());
         }
       }},
      {"whiten_advantages", [](TrainConfig& c, const json& v, const std::string& k) { c.whiten_advantages = get_bool(v, k); }},
      {"eps_v", [](TrainConfig& c, const json& v, const std::string& k) { c.eps_v = get_real(v, k); }},
      {"epochs_per_batch", [](TrainConfig& c, const json& v, const std::string& k) { c.epochs_per_batch = get_size(v, k); }},
      {"minibatch_size", [](TrainConfig& c, const json& v, const std::string& k) { c.minibatch_size = get_size(v, k); }},
      {"grad_clip", [](TrainConfig& c, const json& v, const std::string& k) { c.grad_clip = get_real(v, k); }},
      {"window", [](TrainConfig& c, const json& v, const std::string& k) { c.window = get_size(v, k); }},
      {"seed", [](TrainConfig& c, const json& v, const std::string& k) { c.seed = get_uint(v, k); }},
      {"moving_average_window",
       [](TrainConfig& c, const json& v, const std::string& k) { c.moving_average_window = get_size(v, k); }},
      {"workers", [](TrainConfig& c, const json& v, const std::string& k) { c.workers = get_size(v, k); }},
      {"countdown", [](TrainConfig& c, const json& v, const std::string& k) { apply_object(c, v, countdown_setters(), k); }},
      {"bandit", [](TrainConfig& c, const json& v, const std::string& k) { apply_object(c, v, bandit_setters(), k); }},
  };
  return s;
}

void check_valid(const TrainConfig& cfg) {
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
}

}  // namespace

TrainConfig parse_train_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  Algorithm algorithm = Algorithm::grpo;
  EnvKind env = EnvKind::countdown;
  try {
    if (doc.contains("algorithm")) algorithm = algorithm_from_string(get_string(doc["algorithm"], "algorithm"));
    if (doc.contains("env")) env = env_kind_from_string(get_string(doc["env"], "env"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid field: ") + e.what());
  }
  TrainConfig cfg = default_config(algorithm, env);
  apply_object(cfg, doc, top_setters(), "");
  check_valid(cfg);
  return cfg;
}

TrainConfig apply_axis(TrainConfig cfg, SweepAxis axis, const json& value) {
  const std::string key = std::string("values[") + to_string(axis) + "]";
  switch (axis) {
    case SweepAxis::group_size: cfg.group_size = get_size(value, key); break;
    case SweepAxis::beta: cfg.coeffs.beta = get_real(value, key); break;
    case SweepAxis::entropy_coeff: cfg.coeffs.c2 = get_real(value, key); break;
    case SweepAxis::learning_rate: cfg.adam.learning_rate = get_real(value, key); break;
    case SweepAxis::ds_enabled: cfg.ds.enabled = get_bool(value, key); break;
    case SweepAxis::aggregation_mode:
      try {
        cfg.aggregation = aggregation_mode_from_string(get_string(value, key));
      } catch (const std::invalid_argument& e) {
        invalid(key, e.what());
      }
      break;
    case SweepAxis::clip_high: cfg.clip.eps_high = get_real(value, key); break;
  }
  check_valid(cfg);
  return cfg;
}

namespace {

void check_axis_applies(SweepAxis axis, Algorithm algorithm) {
  const bool grouped = algorithm == Algorithm::grpo || algorithm == Algorithm::dapo;
  bool ok = true;
  switch (axis) {
    case SweepAxis::beta: ok = algorithm == Algorithm::grpo || algorithm == Algorithm::ppo; break;
    case SweepAxis::ds_enabled:
    case SweepAxis::aggregation_mode: ok = grouped; break;
    case SweepAxis::clip_high: ok = algorithm != Algorithm::vpg; break;
    default: break;
  }
  if (!ok)
    throw ConfigError(std::string("axis ") + to_string(axis) + " does not apply to algorithm " + to_string(algorithm));
}

}  // namespace

SweepSpec parse_sweep_spec(const json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep spec must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "base" && key != "axis" && key != "values" && key != "seeds" && key != "jobs")
      throw ConfigError("unknown key: " + key);
  if (!doc.contains("axis")) throw ConfigError("sweep spec needs \"axis\"");
  SweepSpec spec;
  spec.base = parse_train_config(doc.value("base", json::object()));
  spec.axis = sweep_axis_from_string(get_string(doc["axis"], "axis"));
  check_axis_applies(spec.axis, spec.base.algorithm);
  if (!doc.contains("values") || !doc["values"].is_array() || doc["values"].empty())
    throw ConfigError("invalid field values: expected a non-empty list");
  for (const auto& v : doc["values"]) {
    apply_axis(spec.base, spec.axis, v);
    spec.values.push_back(v);
  }
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_array() || doc["seeds"].empty()) invalid("seeds", "expected a non-empty list");
    for (const auto& s : doc["seeds"]) spec.seeds.push_back(get_uint(s, "seeds"));
  } else {
    spec.seeds.push_back(spec.base.seed);
  }
  if (doc.contains("jobs")) {
    spec.jobs = get_size(doc["jobs"], "jobs");
    if (spec.jobs < 1) invalid("jobs", "must be at least 1");
  }
  return spec;
}

ParsedConfig parse_config(const json& doc) {
  if (doc.is_object() && doc.contains("axis")) return parse_sweep_spec(doc);
  return parse_train_config(doc);
}

ParsedConfig parse_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

json to_json(const TrainConfig& c) {
  json j;
  j["algorithm"] = to_string(c.algorithm);
  j["env"] = to_string(c.env);
  j["steps"] = c.steps;
  j["prompts_per_step"] = c.prompts_per_step;
  j["group_size"] = c.group_size;
  j["max_len"] = c.max_len;
  j["learning_rate"] = c.adam.learning_rate;
  j["adam_beta1"] = c.adam.beta1;
  j["adam_beta2"] = c.adam.beta2;
  j["adam_eps"] = c.adam.eps;
  j["gamma"] = c.gae.gamma;
  j["lambda"] = c.gae.lambda;
  j["clip_low"] = c.clip.eps_low;
  j["clip_high"] = c.clip.eps_high;
  j["value_coeff"] = c.coeffs.c1;
  j["entropy_coeff"] = c.coeffs.c2;
  j["beta"] = c.coeffs.beta;
  j["aggregation_mode"] = to_string(c.aggregation);
  j["ds_enabled"] = c.ds.enabled;
  j["max_refill_rounds"] = c.ds.max_refill_rounds;
  j["eps_std"] = c.group_adv.eps_std;
  j["baseline"] = to_string(c.baseline);
  j["whiten_advantages"] = c.whiten_advantages;
  j["eps_v"] = c.eps_v;
  j["epochs_per_batch"] = c.epochs_per_batch;
  j["minibatch_size"] = c.minibatch_size;
  j["grad_clip"] = c.grad_clip;
  j["window"] = c.window;
  j["seed"] = c.seed;
  j["moving_average_window"] = c.moving_average_window;
  j["workers"] = c.workers;
  json cd;
  cd["k"] = c.countdown.k;
  cd["max_target"] = c.countdown.max_target;
  cd["num_prompts"] = c.countdown.num_prompts;
  cd["dataset_seed"] = c.countdown.dataset_seed;
  if (!c.countdown.instances_path.empty()) cd["instances"] = c.countdown.instances_path;
  cd["format_weight"] = c.countdown.weights.w_format;
  cd["correct_weight"] = c.countdown.weights.w_correct;
  j["countdown"] = cd;
  j["bandit"] = {{"vocab_size", c.bandit.vocab_size}, {"horizon", c.bandit.horizon}, {"table_seed", c.bandit.table_seed}};
  return j;
}

json to_json(const MetricsRecord& r) {
  return json{{"step", r.step},
              {"mean_reward", r.mean_reward},
              {"accuracy", r.accuracy},
              {"mean_entropy", r.mean_entropy},
              {"approx_kl_old", r.approx_kl_old},
              {"approx_kl_ref", r.approx_kl_ref},
              {"clip_fraction", r.clip_fraction},
              {"mean_response_length", r.mean_response_length},
              {"surrogate_objective", r.surrogate_objective},
              {"grad_norm", r.grad_norm},
              {"ds_overhead_fraction", r.ds_overhead_fraction}};
}

std::string config_reference() {
  const TrainConfig g = default_config(Algorithm::grpo);
  std::ostringstream os;
  os << "Config keys (JSON object; unknown keys are rejected). Defaults shown for grpo on countdown;\n"
        "ppo: beta 0.01, epochs_per_batch 4; dapo: clip_high 0.28, beta 0, token_level; vpg: beta 0.\n"
     << to_json(g).dump(2) << "\n"
     << "Sweep files add: axis (group_size|beta|entropy_coeff|learning_rate|ds_enabled|aggregation_mode|clip_high),\n"
        "values [...], seeds [...], jobs N, with the run config under \"base\".\n";
  return os.str();
}

}  // namespace polab
