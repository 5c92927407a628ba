#include "ergograph/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "ergograph/rng.hpp"

namespace ergograph {
namespace {

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number_integer()) return b.is_number_integer();
  if (a.is_number()) return b.is_number();
  return a.type() == b.type();
}

std::string kind_name(const nlohmann::json& v) {
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_boolean()) return "a boolean";
  if (v.is_string()) return "a string";
  return "a value of the default's type";
}

ConfigError config_error(std::string pointer, std::string message) {
  return ConfigError(std::vector<ConfigIssue>{{std::move(pointer), std::move(message)}});
}

}  // namespace

nlohmann::json ExperimentConfig::default_command_blocks() {
  return {
      {"family-check", {{"jacobian_samples", 1000}, {"contraction_samples", 100000}}},
      {"attractor", {{"tol_cells", 2.0}, {"max_iters", 200}, {"mode", "generators"}, {"circle_samples", 1024}}},
      {"chaos", {{"n", 100000}, {"burn_in", 1000}, {"max_w1_rel", 5e-3}}},
      {"covering", {{"budget", 2000}, {"resolution", 512}}},
      {"cusp", {{"depth", 40}, {"boundary_samples", 4096}}},
      {"graph", {{"samples", 100}, {"tol", 1e-8}, {"invariance_tol", 1e-6}}},
      {"bony", {{"samples", 200}, {"depth", 200}, {"diam_tol_cells", 10.0}, {"bins", 20}}},
      {"usc", {{"points", 100}, {"trials", 10}, {"eps_rel", 1e-2}, {"depth", 200}}},
      {"sync", {{"pairs", 100}, {"max_steps", 5000}, {"tol", 1e-8}}},
      {"lyapunov", {{"starts", 50}, {"n", 100000}, {"bootstrap", 2000}, {"prefactor_eps", 0.05}}},
      {"birkhoff", {{"starts", 50}, {"n", 100000}}},
      {"mixing", {{"n_max", 50}, {"orbit_len", 1000000}, {"bootstrap", 200}, {"ratio", 5.0}}},
      {"perturb",
       {{"eps", 1e-3},
        {"modes", 4},
        {"c1_samples", 100000},
        {"splitting_samples", 100000},
        {"gate_samples", 20000},
        {"sync_pairs", 100},
        {"lyapunov_starts", 50},
        {"lyapunov_n", 100000},
        {"bony_samples", 200},
        {"usc_points", 20},
        {"invariance_samples", 100},
        {"srb_starts", 50},
        {"srb_n", 100000}}},
  };
}

const std::vector<std::string>& ExperimentConfig::command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : default_command_blocks().items()) out.push_back(k);
    return out;
  }();
  return names;
}

std::uint64_t ExperimentConfig::seed_for(const std::string& command) const {
  return mix_seed(master_seed, fnv1a64(command));
}

std::string ExperimentConfig::hash() const {
  auto j = to_json(*this);
  j.erase("output_dir");
  return config_hash(j);
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {{"family", to_json(cfg.family)},
          {"grid", {{"resolution", cfg.resolution}}},
          {"master_seed", cfg.master_seed},
          {"output_dir", cfg.output_dir},
          {"commands", cfg.commands}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("", "experiment configuration must be a JSON object");
  std::vector<ConfigIssue> issues;
  static const std::vector<std::string> keys{"family", "grid", "master_seed", "output_dir", "commands"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) issues.push_back({"/" + key, "unknown key"});
  }
  ExperimentConfig c;
  if (j.contains("family")) {
    try {
      c.family = family_config_from_json(j["family"]);
      for (auto& i : validate(c.family)) issues.push_back({"/family" + i.pointer, i.message});
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) issues.push_back({"/family" + i.pointer, i.message});
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (!g.is_object()) {
      issues.push_back({"/grid", "expected an object"});
    } else {
      for (const auto& [key, _] : g.items()) {
        if (key != "resolution") issues.push_back({"/grid/" + key, "unknown key"});
      }
      if (g.contains("resolution")) {
        if (!g["resolution"].is_number_integer() || g["resolution"].get<long long>() < 8) {
          issues.push_back({"/grid/resolution", "expected an integer >= 8"});
        } else {
          c.resolution = g["resolution"].get<int>();
        }
      }
    }
  }
  if (j.contains("master_seed")) {
    if (!j["master_seed"].is_number_unsigned()) issues.push_back({"/master_seed", "expected an unsigned integer"});
    else c.master_seed = j["master_seed"].get<std::uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) issues.push_back({"/output_dir", "expected a string"});
    else c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("commands")) {
    const auto& cmds = j["commands"];
    if (!cmds.is_object()) {
      issues.push_back({"/commands", "expected an object"});
    } else {
      for (const auto& [name, block] : cmds.items()) {
        const std::string p = "/commands/" + name;
        if (!c.commands.contains(name)) {
          issues.push_back({p, "unknown command"});
          continue;
        }
        if (!block.is_object()) {
          issues.push_back({p, "expected an object"});
          continue;
        }
        for (const auto& [key, value] : block.items()) {
          auto& slot = c.commands[name];
          if (!slot.contains(key)) issues.push_back({p + "/" + key, "unknown parameter"});
          else if (!same_kind(slot[key], value)) issues.push_back({p + "/" + key, "expected " + kind_name(slot[key])});
          else slot[key] = slot[key].is_number_float() ? nlohmann::json(value.get<double>()) : value;
        }
      }
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("", std::string("JSON parse error: ") + e.what());
  }
  return experiment_config_from_json(j);
}

void set_command_param(ExperimentConfig& cfg, const std::string& command, const std::string& key,
                       const nlohmann::json& value) {
  const std::string p = "/commands/" + command + "/" + key;
  if (!cfg.commands.contains(command) || !cfg.commands[command].contains(key)) {
    throw config_error(p, "unknown parameter");
  }
  auto& slot = cfg.commands[command][key];
  // integers are accepted for real-valued parameters
  if (!same_kind(slot, value)) throw config_error(p, "expected " + kind_name(slot));
  slot = slot.is_number_float() ? nlohmann::json(value.get<double>()) : value;
}

}  // namespace ergograph
