#include "qtune/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <thread>

#include "qtune/error.hpp"
#include "qtune/fileio.hpp"

namespace qtune {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json parameters_json(const ActionSpace& space, std::size_t action) {
  json p = json::object();
  const Action a = space.action(action);
  for (std::size_t o = 0; o < space.operators().size(); ++o) {
    const auto& op = space.operators()[o];
    for (std::size_t i = 0; i < op.parameters.size(); ++i)
      p[op.name + "." + op.parameters[i].name] = a.elementary[o].assignment[i];
  }
  return p;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

double mean_D(Pipeline& pipeline, std::size_t action) {
  const std::size_t n = pipeline.samples().size();
  double sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) sum += pipeline.evaluate(s, action).D;
  return sum / static_cast<double>(n);
}

}  // namespace

Session::Session(RunConfig cfg) : cfg_(std::move(cfg)), space_(cfg_.operators) {
  cfg_.validate();
}

void Session::set_seed(std::uint64_t seed) {
  cfg_.apply_seed(seed);
  pipeline_.reset();
  qtable_.reset();
}

void Session::set_output_dir(std::string dir) {
  if (dir.empty()) fail(ErrorKind::Config, "output directory must not be empty");
  cfg_.output_dir = std::move(dir);
}

Pipeline& Session::pipeline() {
  if (!pipeline_) {
    std::vector<Sample> samples = cfg_.dataset.directory ? load_dataset(*cfg_.dataset.directory)
                                                         : generate_dataset(cfg_.dataset.synthetic);
    if (samples.empty()) fail(ErrorKind::Config, "dataset is empty");
    pipeline_ = std::make_unique<Pipeline>(space_, std::move(samples), cfg_.pipeline);
  }
  return *pipeline_;
}

CacheStats Session::cache_stats() const { return pipeline_ ? pipeline_->stats() : CacheStats{}; }

GenerateResult Session::generate() { return generate(cfg_.output_dir); }

GenerateResult Session::generate(const std::string& out_dir) {
  OutputLock lock(out_dir);
  const auto samples = generate_dataset(cfg_.dataset.synthetic);
  json manifest = {{"generator", "qtune synthetic textured disc"},
                   {"seed", cfg_.dataset.synthetic.seed},
                   {"count", samples.size()},
                   {"config", to_json(cfg_.dataset.synthetic)}};
  json geometry = json::array();
  for (const auto& s : samples) {
    json g = {{"id", s.id}};
    if (s.disc) g.update({{"cx", s.disc->cx}, {"cy", s.disc->cy}, {"radius", s.disc->radius}});
    geometry.push_back(g);
  }
  manifest["samples"] = geometry;
  save_dataset(out_dir, samples, manifest.dump(2) + "\n");
  return {samples.size(), cfg_.dataset.synthetic.seed, out_dir};
}

std::string learning_curve_csv(const std::vector<EpisodeStats>& curve) {
  std::string out = "episode,steps,total_reward,reached_terminal\n";
  for (const auto& e : curve)
    out += std::to_string(e.episode) + "," + std::to_string(e.steps) + "," + fmt_double(e.total_reward) + "," +
           (e.reached_terminal ? "1" : "0") + "\n";
  return out;
}

json qtable_json(const QTable& q) {
  json entries = json::array();
  for (const auto& [key, row] : q.sorted_rows()) {
    const json bins = key.start ? json("START") : json(std::vector<int>(key.bins.begin(), key.bins.end()));
    for (std::size_t a = 0; a < row.size(); ++a)
      entries.push_back({{"state_bins", bins}, {"action_index", a}, {"value", row[a]}});
  }
  return entries;
}

TrainResult Session::train() { return train(cfg_.output_dir); }

TrainResult Session::train(const std::string& out_dir) {
  OutputLock lock(out_dir);
  Pipeline& pipe = pipeline();

  std::string trace;
  PipelineEnvironment::TraceSink sink;
  if (cfg_.trace) {
    trace = "sample,action,n,k,x1,x2,x3,x4,d1,d2,d3,d4,D,r\n";
    sink = [&trace](const Sample& s, const Evaluation& ev) {
      trace += s.id + "," + std::to_string(ev.action) + "," + std::to_string(ev.window) + "," + std::to_string(ev.k);
      for (double v : {ev.features.x1, ev.features.x2, ev.features.x3, ev.features.x4, ev.diffs.d1, ev.diffs.d2,
                       ev.diffs.d3, ev.diffs.d4, ev.D, ev.outcome.reward})
        trace += "," + fmt_double(v);
      trace += "\n";
    };
  }

  qtable_ = std::make_unique<QTable>(space_.count());
  TrainResult result;
  result.report = qtune::train([&](std::size_t i) { return std::make_unique<PipelineEnvironment>(pipe, i, sink); },
                               pipe.samples().size(), *qtable_, cfg_.learner);
  result.best_action = result.report.greedy_action;
  result.best_description = space_.describe(result.best_action);
  result.best_mean_D = mean_D(pipe, result.best_action);

  write_file_atomic(path_in(out_dir, "learning_curve.csv"), learning_curve_csv(result.report.curve));
  write_file_atomic(path_in(out_dir, "qtable.json"), qtable_json(*qtable_).dump() + "\n");
  const json best = {{"action_index", result.best_action},
                     {"action", result.best_description},
                     {"parameters", parameters_json(space_, result.best_action)},
                     {"mean_D", result.best_mean_D},
                     {"greedy_values", result.report.greedy_values},
                     {"episodes", result.report.curve.size()},
                     {"samples", pipe.samples().size()},
                     {"seed", cfg_.seed}};
  write_file_atomic(path_in(out_dir, "best_action.json"), best.dump(2) + "\n");
  if (cfg_.trace) write_file_atomic(path_in(out_dir, "trace.csv"), trace);
  return result;
}

GridsearchResult Session::gridsearch() { return gridsearch(cfg_.output_dir); }

GridsearchResult Session::gridsearch(const std::string& out_dir) {
  OutputLock lock(out_dir);
  Pipeline& pipe = pipeline();
  const std::size_t n_samples = pipe.samples().size();
  const std::size_t n_actions = space_.count();
  const std::size_t jobs = n_samples * n_actions;

  // Independent (sample, action) evaluations fan out over worker threads.
  std::vector<double> D(jobs, 0.0);
  std::vector<char> terminal(jobs, 0);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(std::max(1u, std::thread::hardware_concurrency()));
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < errors.size(); ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t j = next++; j < jobs; j = next++) {
            const Evaluation ev = pipe.evaluate(j % n_samples, j / n_samples);
            D[j] = ev.D;
            terminal[j] = ev.outcome.terminal;
          }
        } catch (...) {
          errors[w] = std::current_exception();
          next = jobs;
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  GridsearchResult result;
  for (std::size_t a = 0; a < n_actions; ++a) {
    GridRow row{a, space_.describe(a), 0.0, 0};
    for (std::size_t s = 0; s < n_samples; ++s) {
      row.mean_D += D[a * n_samples + s];
      row.terminal_samples += terminal[a * n_samples + s];
    }
    row.mean_D /= static_cast<double>(n_samples);
    result.rows.push_back(std::move(row));
  }
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const GridRow& a, const GridRow& b) { return a.mean_D < b.mean_D; });
  result.best_action = result.rows.front().action;
  result.best_mean_D = result.rows.front().mean_D;
  for (const auto& row : result.rows)
    if (row.mean_D < result.best_mean_D) fail(ErrorKind::Numeric, "gridsearch: argmin row is not minimal");

  std::string csv = "rank,action_index";
  for (const auto& op : space_.operators())
    for (const auto& p : op.parameters) csv += "," + op.name + "." + p.name;
  csv += ",mean_D,terminal_samples\n";
  json rows = json::array();
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    const auto& row = result.rows[r];
    csv += std::to_string(r) + "," + std::to_string(row.action);
    const Action a = space_.action(row.action);
    for (const auto& e : a.elementary)
      for (auto v : e.assignment) csv += "," + std::to_string(v);
    csv += "," + fmt_double(row.mean_D) + "," + std::to_string(row.terminal_samples) + "\n";
    rows.push_back({{"action_index", row.action},
                    {"action", row.description},
                    {"parameters", parameters_json(space_, row.action)},
                    {"mean_D", row.mean_D},
                    {"terminal_samples", row.terminal_samples}});
  }
  write_file_atomic(path_in(out_dir, "gridsearch.csv"), csv);
  const json report = {{"best_action_index", result.best_action},
                       {"best_action", space_.describe(result.best_action)},
                       {"best_parameters", parameters_json(space_, result.best_action)},
                       {"best_mean_D", result.best_mean_D},
                       {"samples", n_samples},
                       {"seed", cfg_.seed},
                       {"rows", rows}};
  write_file_atomic(path_in(out_dir, "gridsearch.json"), report.dump(2) + "\n");
  return result;
}

EvaluateResult Session::evaluate(const std::string& action, const std::string& image_path, const std::string& mask_path,
                                 const std::string& out_dir, bool dump_features) {
  EvaluateResult result;
  result.action = space_.parse(action);
  const GrayImage image = read_pgm_file(image_path);
  std::optional<BinaryMask> mask;
  if (!mask_path.empty()) {
    Sample s{fs::path(mask_path).stem().string(), image, read_pgm_file(mask_path), std::nullopt};
    for (auto& p : s.mask.pixels) p = p ? 255 : 0;
    validate_sample(s);
    mask = std::move(s.mask);
  }
  result.has_reference = mask.has_value();

  OutputLock lock(out_dir);
  GlcmConfig g = cfg_.pipeline.glcm;
  g.window = static_cast<int>(space_.value(result.action, "GLCM", "n"));
  const FeatureMap fm = feature_map(image, g);
  const int k = static_cast<int>(space_.value(result.action, "KMEANS", "k"));
  result.segmentation = run_segmentation(fm, k, mask ? &*mask : nullptr, cfg_.pipeline);
  const auto& seg = result.segmentation;

  write_pgm_file(path_in(out_dir, "labeling.pgm"), labeling_to_image(seg.labeling));
  write_pgm_file(path_in(out_dir, "object.pgm"), seg.object.mask);
  if (dump_features) write_feature_map_csv(fm, path_in(out_dir, "features"));

  json metrics = {{"action_index", result.action},
                  {"action", space_.describe(result.action)},
                  {"parameters", parameters_json(space_, result.action)},
                  {"selection", mask ? "max_dice" : "largest_interior_component"},
                  {"x1", seg.features.x1},
                  {"x2", seg.features.x2},
                  {"x3", seg.features.x3},
                  {"x4", seg.features.x4},
                  {"object_area", mask_area(seg.object.mask)}};
  if (mask) {
    metrics.update({{"d1", seg.diffs->d1},
                    {"d2", seg.diffs->d2},
                    {"d3", seg.diffs->d3},
                    {"d4", seg.diffs->d4},
                    {"D", seg.D},
                    {"reward", seg.outcome.reward},
                    {"terminal", seg.outcome.terminal},
                    {"dice", seg.object.dice}});
  } else {
    // Undefined without a reference area.
    metrics["x3"] = nullptr;
  }
  write_file_atomic(path_in(out_dir, "metrics.json"), metrics.dump(2) + "\n");
  return result;
}

}  // namespace qtune
