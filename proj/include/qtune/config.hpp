#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtune/dataset.hpp"
#include "qtune/evaluation.hpp"
#include "qtune/param_space.hpp"
#include "qtune/qlearn.hpp"

namespace qtune {

/// Where samples come from: a directory written by `generate`, or an
/// in-memory synthetic set.
struct DatasetSource {
  std::optional<std::string> directory;
  SyntheticConfig synthetic;
};

/// Everything a run needs; the JSON form is the tool's user-facing input.
struct RunConfig {
  DatasetSource dataset;
  std::vector<OperatorSpec> operators;
  LearnerConfig learner;
  PipelineSettings pipeline;
  std::string output_dir = "qtune_out";
  std::uint64_t seed = 1;
  /// Write trace.csv with one row per training step.
  bool trace = false;

  /// Sets the run seed and every seed derived from it.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

/// GLCM.n in {9,11,...,21}, KMEANS.k in {1,...,5}.
std::vector<OperatorSpec> reference_operators();

/// Defaults throughout, reference operators, 30 synthetic 128x128 images.
RunConfig default_config();

/// Missing keys take defaults; unknown keys and invalid values throw
/// Error{Config} with the JSON path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const SyntheticConfig& cfg);

}  // namespace qtune
