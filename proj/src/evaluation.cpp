#include "qtune/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "qtune/error.hpp"

namespace qtune {

void DiscretizerConfig::validate() const {
  if (x1_bins < 1 || x2_bins < 1 || x3_bins < 1 || x4_bins < 1 || x1_bins > 255 || x2_bins > 255 || x3_bins > 255 ||
      x4_bins > 255)
    fail(ErrorKind::Config, "discretizer: bin counts must be in [1,255]");
  if (!(x2_max > 0.0) || !(x3_max > 0.0) || !(x4_max > 0.0))
    fail(ErrorKind::Config, "discretizer: bin ranges must be positive");
}

void DifferenceWeights::validate() const {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) fail(ErrorKind::Config, "weights: must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(ErrorKind::Config, "weights: must sum to 1");
}

void RewardConfig::validate() const {
  if (!(eps > 0.0)) fail(ErrorKind::Config, "reward: eps must be > 0");
  if (!(delta >= 0.0)) fail(ErrorKind::Config, "reward: delta must be >= 0");
}

void PipelineSettings::validate() const {
  GlcmConfig g = glcm;
  g.validate();
  kmeans.validate();
  discretizer.validate();
  weights.validate();
  reward.validate();
}

std::array<double, 4> mean_normalized_texture(const BinaryMask& mask, const FeatureMap& fm) {
  std::array<double, 4> sum{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.pixels[i]) continue;
    const auto c = normalized_channels(fm, i);
    for (std::size_t j = 0; j < 4; ++j) sum[j] += c[j];
    ++n;
  }
  if (n)
    for (auto& v : sum) v /= static_cast<double>(n);
  return sum;
}

namespace {

void check_dims(const BinaryMask& a, const FeatureMap& fm, const char* what) {
  if (a.width != fm.width || a.height != fm.height)
    fail(ErrorKind::Contract, std::string(what) + ": mask and feature map dimensions differ");
}

}  // namespace

ReferenceStats reference_stats(const BinaryMask& reference, const FeatureMap& fm) {
  check_dims(reference, fm, "reference_stats");
  ReferenceStats r;
  r.area = mask_area(reference);
  if (r.area == 0) fail(ErrorKind::Dataset, "reference mask is empty");
  r.bbox = mask_bbox(reference);
  r.texture = mean_normalized_texture(reference, fm);
  return r;
}

StateFeatures featurize(const BinaryMask& object, std::size_t object_count, const FeatureMap& fm,
                        const BinaryMask& reference) {
  check_dims(object, fm, "featurize");
  check_dims(reference, fm, "featurize");
  const std::size_t ref_area = mask_area(reference);
  if (ref_area == 0) fail(ErrorKind::Contract, "featurize: reference mask is empty");
  StateFeatures f;
  f.x1 = static_cast<double>(object_count);
  const std::size_t area = mask_area(object);
  if (area == 0) return f;
  f.x2 = static_cast<double>(area) / static_cast<double>(fm.size());
  f.x3 = static_cast<double>(area) / static_cast<double>(ref_area);
  const auto tex = mean_normalized_texture(object, fm);
  f.x4 = (tex[0] + tex[1] + tex[2] + tex[3]) / 4.0;
  return f;
}

namespace {

std::uint8_t uniform_bin(double v, double max, int bins) {
  if (!(v > 0.0)) return 0;
  const double b = std::floor(v / max * bins);
  return static_cast<std::uint8_t>(std::min<double>(b, bins - 1));
}

}  // namespace

StateKey discretize(const StateFeatures& f, const DiscretizerConfig& cfg) {
  StateKey k;
  const double x1 = std::max(0.0, std::floor(f.x1));
  k.bins[0] = static_cast<std::uint8_t>(std::min<double>(x1, cfg.x1_bins - 1));
  k.bins[1] = uniform_bin(f.x2, cfg.x2_max, cfg.x2_bins);
  k.bins[2] = uniform_bin(f.x3, cfg.x3_max, cfg.x3_bins);
  k.bins[3] = uniform_bin(f.x4, cfg.x4_max, cfg.x4_bins);
  return k;
}

Differences compute_differences(const BinaryMask& object, std::size_t object_count, const FeatureMap& fm,
                                const ReferenceStats& ref) {
  check_dims(object, fm, "compute_differences");
  if (ref.area == 0) fail(ErrorKind::Dataset, "compute_differences: empty reference");
  Differences d;
  d.d1 = std::min(1.0, std::abs(static_cast<double>(object_count) - 1.0));
  const std::size_t area = mask_area(object);
  if (area == 0) {
    d.d2 = d.d3 = d.d4 = 1.0;
    return d;
  }
  const double ref_diag = ref.bbox.diagonal();
  d.d2 = std::min(1.0, std::abs(mask_bbox(object).diagonal() - ref_diag) / ref_diag);
  d.d3 = std::min(1.0, std::abs(static_cast<double>(area) - static_cast<double>(ref.area)) /
                           static_cast<double>(ref.area));
  const auto tex = mean_normalized_texture(object, fm);
  double t = 0.0;
  for (std::size_t c = 0; c < 4; ++c) t += std::abs(tex[c] - ref.texture[c]);
  d.d4 = std::clamp(t / 4.0, 0.0, 1.0);
  return d;
}

double compute_D(const Differences& d, const DifferenceWeights& w) {
  return w.w[0] * d.d1 + w.w[1] * d.d2 + w.w[2] * d.d3 + w.w[3] * d.d4;
}

RewardOutcome reward(double D, const RewardConfig& cfg) {
  if (D < cfg.eps) return {cfg.r_pos, true};
  if (D < cfg.eps + cfg.delta) return {cfg.r_zero, false};
  return {cfg.r_neg, false};
}

SegmentationResult run_segmentation(const FeatureMap& fm, int k, const BinaryMask* reference,
                                    const PipelineSettings& settings) {
  SegmentationResult out;
  KMeansConfig kc = settings.kmeans;
  kc.k = k;
  const KMeansResult km = kmeans(normalize_features(fm), kc);
  out.labeling = Labeling{fm.width, fm.height, k, km.assignments};

  if (reference) {
    out.object = extract_object(out.labeling, *reference, settings.extract);
    out.features = featurize(out.object.mask, out.object.count, fm, *reference);
    out.diffs = compute_differences(out.object.mask, out.object.count, fm, reference_stats(*reference, fm));
    out.D = compute_D(*out.diffs, settings.weights);
    out.outcome = reward(out.D, settings.reward);
  } else {
    out.object = extract_largest(out.labeling, settings.extract);
    const std::size_t area = mask_area(out.object.mask);
    out.features.x1 = static_cast<double>(out.object.count);
    if (area) {
      out.features.x2 = static_cast<double>(area) / static_cast<double>(fm.size());
      const auto tex = mean_normalized_texture(out.object.mask, fm);
      out.features.x4 = (tex[0] + tex[1] + tex[2] + tex[3]) / 4.0;
    }
  }
  return out;
}

void check_pipeline_space(const ActionSpace& space) {
  const auto& ops = space.operators();
  if (!space.has_parameter("GLCM", "n") || !space.has_parameter("KMEANS", "k"))
    fail(ErrorKind::Config, "action space must declare GLCM.n and KMEANS.k");
  std::size_t params = 0;
  for (const auto& op : ops) params += op.parameters.size();
  if (params != 2) fail(ErrorKind::Config, "action space declares parameters the pipeline does not use; only GLCM.n and KMEANS.k are tunable");
  for (const auto& op : ops) {
    for (const auto& p : op.parameters) {
      for (auto v : p.values) {
        if (op.name == "GLCM" && (v < 3 || v % 2 == 0))
          fail(ErrorKind::Config, "GLCM.n value " + std::to_string(v) + " must be odd and >= 3");
        if (op.name == "KMEANS" && v < 1) fail(ErrorKind::Config, "KMEANS.k value " + std::to_string(v) + " must be >= 1");
      }
    }
  }
}

Pipeline::Pipeline(const ActionSpace& space, std::vector<Sample> samples, PipelineSettings settings)
    : space_(space), samples_(std::move(samples)), settings_(std::move(settings)) {
  check_pipeline_space(space_);
  settings_.validate();
  for (const auto& s : samples_) validate_sample(s);
}

std::shared_ptr<const FeatureMap> Pipeline::feature_map_for(std::size_t sample, ParamValue window) {
  const auto key = std::make_pair(sample, window);
  {
    std::lock_guard lock(mu_);
    if (auto it = feature_maps_.find(key); it != feature_maps_.end()) return it->second;
  }
  GlcmConfig g = settings_.glcm;
  g.window = static_cast<int>(window);
  auto fm = std::make_shared<const FeatureMap>(feature_map(samples_[sample].image, g));
  std::lock_guard lock(mu_);
  // Another thread may have inserted the identical map meanwhile.
  return feature_maps_.try_emplace(key, std::move(fm)).first->second;
}

Evaluation Pipeline::evaluate(std::size_t sample, std::size_t action) {
  if (sample >= samples_.size())
    fail(ErrorKind::Range, "sample index " + std::to_string(sample) + " out of range");
  if (action >= space_.count())
    fail(ErrorKind::Range, "action index " + std::to_string(action) + " out of range");
  const auto key = std::make_pair(sample, action);
  std::promise<Evaluation> promise;
  {
    std::unique_lock lock(mu_);
    if (auto it = results_.find(key); it != results_.end()) {
      ++hits_;
      auto pending = it->second;
      lock.unlock();
      return pending.get();
    }
    results_.emplace(key, promise.get_future().share());
  }

  const Sample& s = samples_[sample];
  Evaluation ev;
  ev.sample = sample;
  ev.action = action;
  ev.window = window_of(action);
  ev.k = k_of(action);

  const char* stage = "feature_map";
  ++misses_;
  try {
    const auto fm = feature_map_for(sample, ev.window);
    stage = "segmentation";
    const SegmentationResult r = run_segmentation(*fm, static_cast<int>(ev.k), &s.mask, settings_);
    stage = "discretize";
    ev.features = r.features;
    ev.key = discretize(r.features, settings_.discretizer);
    ev.diffs = *r.diffs;
    ev.D = r.D;
    ev.outcome = r.outcome;
  } catch (const std::exception& e) {
    try {
      fail(ErrorKind::Pipeline, std::string("stage '") + stage + "' failed on sample '" + s.id + "' for action " +
                                    space_.describe(action) + ": " + e.what());
    } catch (...) {
      promise.set_exception(std::current_exception());
      throw;
    }
  }
  promise.set_value(ev);
  return ev;
}

CacheStats Pipeline::stats() const {
  std::lock_guard lock(mu_);
  return {hits_.load(), misses_.load(), feature_maps_.size()};
}

StepOutcome PipelineEnvironment::step(std::size_t action) {
  const Evaluation ev = pipeline_.evaluate(sample_, action);
  if (trace_) trace_(pipeline_.samples()[sample_], ev);
  return {ev.key, ev.outcome.reward, ev.outcome.terminal};
}

Evaluation env_step(Pipeline& pipeline, std::size_t sample, std::size_t action) {
  return pipeline.evaluate(sample, action);
}

}  // namespace qtune
