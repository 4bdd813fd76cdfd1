#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grl/dgp.hpp"
#include "grl/estimators.hpp"
#include "grl/graph.hpp"

namespace grl {

struct DataParams {
  std::optional<std::size_t> n;
  std::optional<std::size_t> d;
  std::optional<std::string> graph_type;
  std::string cate_type;
  std::optional<std::string> real_data_name;
  double noise_level = 0.0;

  bool operator==(const DataParams&) const = default;
};

struct ModelParams {
  std::size_t num_layers = 0;
  std::size_t hidden_dim = 0;

  bool operator==(const ModelParams&) const = default;
};

struct TrainingParams {
  std::size_t nuisance_epochs = 0;
  std::size_t cate_epochs = 0;
  double lr = 0.0;

  bool operator==(const TrainingParams&) const = default;
};

/// One experiment file. `estimators` and `overrides` are optional top-level
/// keys; overrides hold "key=value" settings for knobs outside the four
/// schema sections (graph.*, dgp.*, data.edge_path, data.feature_path).
struct ExperimentConfig {
  std::string name;
  std::size_t num_seeds = 0;
  DataParams data_params;
  ModelParams model_params;
  TrainingParams training_params;
  std::optional<std::vector<EstimatorKind>> estimators;
  std::vector<std::string> overrides;

  /// Throws ValidationError on violated invariants.
  void validate() const;
  std::vector<EstimatorKind> estimator_list() const;  // all five when unset

  bool operator==(const ExperimentConfig&) const = default;
};

// Both throw ParseError(path, line, ...) on missing keys, unknown keys and
// type mismatches, and ValidationError when the parsed values break an invariant.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<string>");

/// YAML text in the same layout as the experiment files.
std::string emit_config(const ExperimentConfig& cfg);

/// Applies "path=value". Schema paths ("data_params.noise_level", "num_seeds",
/// ...) set the field; extra knobs are checked and appended to cfg.overrides.
/// Throws ValidationError for unknown paths or unparsable values.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// True when `path` names a numeric field or knob that a sweep can vary.
bool is_numeric_param(const std::string& path);

struct ResolvedExperiment {
  GraphSpec graph;
  DgpConfig dgp;
  TrainConfig train;
};

/// Library-level settings for one config; real-data configs need
/// data.edge_path and data.feature_path overrides.
ResolvedExperiment resolve(const ExperimentConfig& cfg);

}  // namespace grl
