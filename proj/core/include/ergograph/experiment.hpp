#pragma once

// Experiment configuration shared by the CLI and the acceptance suite: a family, a grid
// resolution, a master seed, an output directory and one parameter block per command.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergograph/fiber_family.hpp"
#include "ergograph/geometry.hpp"
#include "ergograph/io.hpp"

namespace ergograph {

struct ExperimentConfig {
  FamilyConfig family = FamilyConfig::defaults();
  int resolution = 1024;  // grid cells across diam X
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  nlohmann::json commands = default_command_blocks();

  /// Every command block with its default parameters.
  static nlohmann::json default_command_blocks();
  static const std::vector<std::string>& command_names();

  double h() const { return family.domain.diameter() / resolution; }
  GridGeometry grid() const { return GridGeometry::for_domain(family.domain, resolution); }
  const nlohmann::json& block(const std::string& command) const { return commands.at(command); }
  /// Independent stream per command: mix_seed(master_seed, fnv1a64(command)).
  std::uint64_t seed_for(const std::string& command) const;
  /// Hash of the config without output_dir (artifact locations do not change results).
  std::string hash() const;
  Provenance provenance(const std::string& command) const { return {hash(), seed_for(command)}; }
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict: unknown keys, wrong types and invalid families raise ConfigError with JSON pointers.
/// Missing top-level keys and missing block entries take their defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Sets commands[command][key] = value after checking that the key exists and the type matches.
void set_command_param(ExperimentConfig& cfg, const std::string& command, const std::string& key,
                       const nlohmann::json& value);

}  // namespace ergograph
