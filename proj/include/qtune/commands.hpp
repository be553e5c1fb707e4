#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qtune/config.hpp"
#include "qtune/evaluation.hpp"
#include "qtune/qlearn.hpp"

namespace qtune {

struct GenerateResult {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string directory;
};

struct TrainResult {
  TrainingReport report;
  std::size_t best_action = 0;
  std::string best_description;
  double best_mean_D = 0.0;
};

struct GridRow {
  std::size_t action = 0;
  std::string description;
  double mean_D = 0.0;
  std::size_t terminal_samples = 0;  // samples on which the action earns the success reward
};

struct GridsearchResult {
  std::vector<GridRow> rows;  // ascending mean D, ties by lowest action index
  std::size_t best_action = 0;
  double best_mean_D = 0.0;
};

struct EvaluateResult {
  std::size_t action = 0;
  SegmentationResult segmentation;
  bool has_reference = false;
};

/// A loaded configuration plus its lazily built dataset and pipeline cache.
/// train() and gridsearch() share one cache.
class Session {
 public:
  explicit Session(RunConfig cfg);

  const RunConfig& config() const noexcept { return cfg_; }
  const ActionSpace& space() const noexcept { return space_; }

  void set_seed(std::uint64_t seed);
  void set_output_dir(std::string dir);

  /// Builds the dataset and the pipeline on first use.
  Pipeline& pipeline();

  GenerateResult generate();
  GenerateResult generate(const std::string& out_dir);

  /// Writes learning_curve.csv, qtable.json, best_action.json (and trace.csv
  /// when enabled) under the output directory.
  TrainResult train();
  TrainResult train(const std::string& out_dir);

  /// Writes gridsearch.csv and gridsearch.json.
  GridsearchResult gridsearch();
  GridsearchResult gridsearch(const std::string& out_dir);

  /// Writes labeling.pgm, object.pgm and metrics.json; mask_path may be empty.
  EvaluateResult evaluate(const std::string& action, const std::string& image_path, const std::string& mask_path,
                          const std::string& out_dir, bool dump_features = false);

  /// Last QTable produced by train().
  const QTable* qtable() const noexcept { return qtable_.get(); }

  CacheStats cache_stats() const;

 private:
  RunConfig cfg_;
  ActionSpace space_;
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<QTable> qtable_;
};

/// Serializations used by the report files.
std::string learning_curve_csv(const std::vector<EpisodeStats>& curve);
nlohmann::json qtable_json(const QTable& q);

}  // namespace qtune
