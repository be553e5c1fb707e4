#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtune/dataset.hpp"
#include "qtune/imaging.hpp"
#include "qtune/param_space.hpp"
#include "qtune/qlearn.hpp"
#include "qtune/segmenter.hpp"

namespace qtune {

/// Image descriptor of a segmentation result.
struct StateFeatures {
  double x1 = 0.0;  // qualifying object count
  double x2 = 0.0;  // object area / image area
  double x3 = 0.0;  // object area / reference area
  double x4 = 0.0;  // mean normalized texture over the object
};

/// Bin layout of the Q-table key. x1 is binned by value with the top bin
/// open (">= x1_bins-1"); the others are uniform over [0, max] with values
/// at or above max clamped into the top bin.
struct DiscretizerConfig {
  int x1_bins = 5;
  int x2_bins = 8;
  double x2_max = 1.0;
  int x3_bins = 8;
  double x3_max = 2.0;
  int x4_bins = 8;
  double x4_max = 1.0;

  void validate() const;
};

struct DifferenceWeights {
  std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};

  void validate() const;
};

struct RewardConfig {
  double eps = 0.05;
  double delta = 0.10;
  double r_pos = 10.0;
  double r_zero = 0.0;
  double r_neg = -10.0;

  void validate() const;
};

/// Normalized count, size, surface and texture discrepancies, each in [0,1].
struct Differences {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  double d4 = 0.0;
};

/// Area, bounding box and mean normalized texture of the ground truth,
/// measured on a given feature map.
struct ReferenceStats {
  std::size_t area = 0;
  BoundingBox bbox;
  std::array<double, 4> texture{};
};

/// Mean over the set pixels of `mask` of each normalized channel. Zeros for
/// an empty mask.
std::array<double, 4> mean_normalized_texture(const BinaryMask& mask, const FeatureMap& fm);

/// Throws Error{Dataset} for an empty reference.
ReferenceStats reference_stats(const BinaryMask& reference, const FeatureMap& fm);

/// Throws Error{Contract} on dimension mismatch or an empty reference.
StateFeatures featurize(const BinaryMask& object, std::size_t object_count, const FeatureMap& fm,
                        const BinaryMask& reference);

StateKey discretize(const StateFeatures& f, const DiscretizerConfig& cfg);

Differences compute_differences(const BinaryMask& object, std::size_t object_count, const FeatureMap& fm,
                                const ReferenceStats& ref);

double compute_D(const Differences& d, const DifferenceWeights& w);

struct RewardOutcome {
  double reward = 0.0;
  bool terminal = false;
};

/// D < eps: success, terminal. eps <= D < eps + delta: neutral. Otherwise punishment.
RewardOutcome reward(double D, const RewardConfig& cfg);

struct PipelineSettings {
  GlcmConfig glcm;  // window is overridden per action
  KMeansConfig kmeans;  // k is overridden per action
  ExtractOptions extract;
  DiscretizerConfig discretizer;
  DifferenceWeights weights;
  RewardConfig reward;

  void validate() const;
};

/// Everything one pipeline run produces for an image.
struct SegmentationResult {
  Labeling labeling;
  ObjectSelection object;
  StateFeatures features;
  std::optional<Differences> diffs;  // present when a reference was given
  double D = 0.0;
  RewardOutcome outcome;
};

/// feature map -> normalize -> kmeans -> object selection -> features, and
/// with a reference also differences, D and reward. Without a reference the
/// object is the largest interior component and x3 is 0.
SegmentationResult run_segmentation(const FeatureMap& fm, int k, const BinaryMask* reference,
                                    const PipelineSettings& settings);

/// Memoized env_step payload for one (sample, action).
struct Evaluation {
  std::size_t sample = 0;
  std::size_t action = 0;
  ParamValue window = 0;
  ParamValue k = 0;
  StateFeatures features;
  StateKey key;
  Differences diffs;
  double D = 0.0;
  RewardOutcome outcome;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;  // underlying pipeline executions
  std::size_t feature_maps = 0;
};

/// Binds the GLCM + k-means pipeline to a dataset and an action space.
///
/// The action space must declare exactly GLCM.n and KMEANS.k. evaluate() is
/// safe to call from several threads; results for a (sample, action) pair
/// are computed once and then served from the cache.
class Pipeline {
 public:
  Pipeline(const ActionSpace& space, std::vector<Sample> samples, PipelineSettings settings);

  const ActionSpace& space() const noexcept { return space_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const PipelineSettings& settings() const noexcept { return settings_; }

  /// Throws Error{Pipeline} tagged with the failing stage and the action.
  Evaluation evaluate(std::size_t sample, std::size_t action);

  CacheStats stats() const;

  ParamValue window_of(std::size_t action) const { return space_.value(action, "GLCM", "n"); }
  ParamValue k_of(std::size_t action) const { return space_.value(action, "KMEANS", "k"); }

 private:
  ActionSpace space_;
  std::vector<Sample> samples_;
  PipelineSettings settings_;

  mutable std::mutex mu_;
  // Concurrent requests for one key wait on the first caller's result.
  std::map<std::pair<std::size_t, std::size_t>, std::shared_future<Evaluation>> results_;
  std::map<std::pair<std::size_t, ParamValue>, std::shared_ptr<const FeatureMap>> feature_maps_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};

  std::shared_ptr<const FeatureMap> feature_map_for(std::size_t sample, ParamValue window);
};

/// Throws Error{Config} unless the space declares exactly GLCM.n and KMEANS.k
/// with odd windows >= 3 and k >= 1.
void check_pipeline_space(const ActionSpace& space);

/// One step of the tuning task: evaluate an action on the bound sample.
class PipelineEnvironment : public Environment {
 public:
  using TraceSink = std::function<void(const Sample&, const Evaluation&)>;

  PipelineEnvironment(Pipeline& pipeline, std::size_t sample, TraceSink trace = {})
      : pipeline_(pipeline), sample_(sample), trace_(std::move(trace)) {}

  std::size_t action_count() const override { return pipeline_.space().count(); }
  StepOutcome step(std::size_t action) override;

 private:
  Pipeline& pipeline_;
  std::size_t sample_;
  TraceSink trace_;
};

/// Free-function form of PipelineEnvironment::step.
Evaluation env_step(Pipeline& pipeline, std::size_t sample, std::size_t action);

}  // namespace qtune
