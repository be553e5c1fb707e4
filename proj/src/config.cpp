#include "qtune/config.hpp"

#include <cmath>
#include <set>

#include "qtune/error.hpp"
#include "qtune/fileio.hpp"

namespace qtune {

using nlohmann::json;

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  learner.seed = s;
  dataset.synthetic.seed = s;
  pipeline.kmeans.seed = s;
}

void RunConfig::validate() const {
  learner.validate();
  pipeline.validate();
  if (!dataset.directory) dataset.synthetic.validate();
  check_pipeline_space(ActionSpace(operators));
  if (output_dir.empty()) fail(ErrorKind::Config, "output_dir must not be empty");
}

std::vector<OperatorSpec> reference_operators() {
  return {OperatorSpec{"GLCM", {ParameterSpec{"n", {9, 11, 13, 15, 17, 19, 21}}}},
          OperatorSpec{"KMEANS", {ParameterSpec{"k", {1, 2, 3, 4, 5}}}}};
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.operators = reference_operators();
  cfg.apply_seed(cfg.seed);
  return cfg;
}

namespace {

// Typed accessors over one JSON object that remember the path for errors
// and reject keys nobody asked about.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_, "expected an object");
  }

  /// Rejects keys that were never queried.
  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) bad(path_ + "." + key, "unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(j_.at(key), child(key));
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(path, "expected a number");
      return v.get<T>();
    } else {
      static_assert(std::is_integral_v<T>);
      if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if constexpr (std::is_signed_v<T>) {
          if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) bad(path, "integer out of range");
        }
        return static_cast<T>(u);
      }
      if (v.is_number_integer()) {
        const auto s = v.get<std::int64_t>();
        if constexpr (std::is_unsigned_v<T>) {
          if (s < 0) bad(path, "expected a non-negative integer");
        }
        return static_cast<T>(s);
      }
      bad(path, "expected an integer");
    }
  }

  [[noreturn]] static void bad(const std::string& path, const std::string& why) {
    fail(ErrorKind::Config, "config " + path + ": " + why);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_texture(const json& j, const std::string& path, TextureFamily& t) {
  Reader r(j, path);
  r.get("freq_min", t.freq_min);
  r.get("freq_max", t.freq_max);
  r.get("angle_min", t.angle_min);
  r.get("angle_max", t.angle_max);
  r.get("amplitude", t.amplitude);
  r.get("mean", t.mean);
  r.finish();
}

json texture_json(const TextureFamily& t) {
  return {{"freq_min", t.freq_min}, {"freq_max", t.freq_max}, {"angle_min", t.angle_min},
          {"angle_max", t.angle_max}, {"amplitude", t.amplitude}, {"mean", t.mean}};
}

void read_synthetic(const json& j, const std::string& path, SyntheticConfig& s) {
  Reader r(j, path);
  r.get("count", s.count);
  r.get("width", s.width);
  r.get("height", s.height);
  r.get("radius_min", s.radius_min);
  r.get("radius_max", s.radius_max);
  r.get("margin", s.margin);
  r.get("noise", s.noise);
  if (r.has("background")) read_texture(r.raw("background"), r.child("background"), s.background);
  if (r.has("disc")) read_texture(r.raw("disc"), r.child("disc"), s.disc);
  r.finish();
}

std::vector<OperatorSpec> read_operators(const json& j, const std::string& path) {
  if (!j.is_array()) Reader::bad(path, "expected an array of operators");
  std::vector<OperatorSpec> ops;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string op_path = path + "[" + std::to_string(i) + "]";
    Reader r(j[i], op_path);
    OperatorSpec op;
    if (!r.has("name")) Reader::bad(op_path, "missing 'name'");
    r.get("name", op.name);
    if (!r.has("parameters")) Reader::bad(op_path, "missing 'parameters'");
    const json& params = r.raw("parameters");
    if (!params.is_array()) Reader::bad(r.child("parameters"), "expected an array");
    for (std::size_t p = 0; p < params.size(); ++p) {
      const std::string p_path = r.child("parameters") + "[" + std::to_string(p) + "]";
      Reader pr(params[p], p_path);
      ParameterSpec spec;
      if (!pr.has("name")) Reader::bad(p_path, "missing 'name'");
      pr.get("name", spec.name);
      if (!pr.has("values")) Reader::bad(p_path, "missing 'values'");
      const json& values = pr.raw("values");
      if (!values.is_array()) Reader::bad(pr.child("values"), "expected an array of integers");
      for (std::size_t v = 0; v < values.size(); ++v)
        spec.values.push_back(Reader::convert<ParamValue>(values[v], pr.child("values") + "[" + std::to_string(v) + "]"));
      pr.finish();
      op.parameters.push_back(std::move(spec));
    }
    r.finish();
    ops.push_back(std::move(op));
  }
  return ops;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg = default_config();
  {
    Reader r(j, "$");
    if (r.has("seed")) cfg.seed = Reader::convert<std::uint64_t>(r.raw("seed"), "$.seed");
    r.get("output_dir", cfg.output_dir);
    r.get("trace", cfg.trace);

    if (r.has("dataset")) {
      Reader d(r.raw("dataset"), "$.dataset");
      if (d.has("directory")) cfg.dataset.directory = Reader::convert<std::string>(d.raw("directory"), d.child("directory"));
      if (d.has("synthetic")) read_synthetic(d.raw("synthetic"), d.child("synthetic"), cfg.dataset.synthetic);
      d.finish();
    }
    if (r.has("operators")) cfg.operators = read_operators(r.raw("operators"), "$.operators");
    if (r.has("learner")) {
      Reader l(r.raw("learner"), "$.learner");
      l.get("alpha", cfg.learner.alpha);
      l.get("gamma", cfg.learner.gamma);
      l.get("epsilon", cfg.learner.epsilon);
      l.get("max_steps_per_episode", cfg.learner.max_steps_per_episode);
      l.get("num_episodes", cfg.learner.num_episodes);
      if (l.has("greedy_readout")) {
        const auto v = Reader::convert<std::string>(l.raw("greedy_readout"), "$.learner.greedy_readout");
        if (v == "start") cfg.learner.readout = GreedyReadout::Start;
        else if (v == "first_states") cfg.learner.readout = GreedyReadout::FirstStates;
        else Reader::bad("$.learner.greedy_readout", "expected \"start\" or \"first_states\"");
      }
      l.finish();
    }
    if (r.has("glcm")) {
      Reader g(r.raw("glcm"), "$.glcm");
      g.get("levels", cfg.pipeline.glcm.levels);
      g.get("symmetric", cfg.pipeline.glcm.symmetric);
      if (g.has("offsets")) {
        const json& offs = g.raw("offsets");
        if (!offs.is_array()) Reader::bad("$.glcm.offsets", "expected an array of [dx, dy] pairs");
        cfg.pipeline.glcm.offsets.clear();
        for (std::size_t i = 0; i < offs.size(); ++i) {
          const std::string p = "$.glcm.offsets[" + std::to_string(i) + "]";
          if (!offs[i].is_array() || offs[i].size() != 2) Reader::bad(p, "expected [dx, dy]");
          cfg.pipeline.glcm.offsets.push_back(
              {Reader::convert<int>(offs[i][0], p + "[0]"), Reader::convert<int>(offs[i][1], p + "[1]")});
        }
      }
      g.finish();
    }
    if (r.has("kmeans")) {
      Reader k(r.raw("kmeans"), "$.kmeans");
      k.get("max_iters", cfg.pipeline.kmeans.max_iters);
      k.get("tol", cfg.pipeline.kmeans.tol);
      k.finish();
    }
    if (r.has("segmentation")) {
      Reader s(r.raw("segmentation"), "$.segmentation");
      s.get("min_area", cfg.pipeline.extract.min_area);
      s.get("count_all_clusters", cfg.pipeline.extract.count_all_clusters);
      s.finish();
    }
    if (r.has("discretizer")) {
      Reader d(r.raw("discretizer"), "$.discretizer");
      auto& dc = cfg.pipeline.discretizer;
      d.get("x1_bins", dc.x1_bins);
      d.get("x2_bins", dc.x2_bins);
      d.get("x2_max", dc.x2_max);
      d.get("x3_bins", dc.x3_bins);
      d.get("x3_max", dc.x3_max);
      d.get("x4_bins", dc.x4_bins);
      d.get("x4_max", dc.x4_max);
      d.finish();
    }
    if (r.has("weights")) {
      const json& w = r.raw("weights");
      if (!w.is_array() || w.size() != 4) Reader::bad("$.weights", "expected an array of 4 numbers");
      for (std::size_t i = 0; i < 4; ++i)
        cfg.pipeline.weights.w[i] = Reader::convert<double>(w[i], "$.weights[" + std::to_string(i) + "]");
    }
    if (r.has("reward")) {
      Reader rw(r.raw("reward"), "$.reward");
      rw.get("eps", cfg.pipeline.reward.eps);
      rw.get("delta", cfg.pipeline.reward.delta);
      rw.get("r_pos", cfg.pipeline.reward.r_pos);
      rw.get("r_zero", cfg.pipeline.reward.r_zero);
      rw.get("r_neg", cfg.pipeline.reward.r_neg);
      rw.finish();
    }
    r.finish();
  }
  cfg.apply_seed(cfg.seed);
  cfg.validate();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig load_config(const std::string& path) {
  try {
    return parse_config_text(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) fail(ErrorKind::Config, e.what());
    fail(e.kind(), path + ": " + e.what());
  }
}

json to_json(const SyntheticConfig& s) {
  return {{"count", s.count},
          {"width", s.width},
          {"height", s.height},
          {"radius_min", s.radius_min},
          {"radius_max", s.radius_max},
          {"margin", s.margin},
          {"noise", s.noise},
          {"background", texture_json(s.background)},
          {"disc", texture_json(s.disc)}};
}

json to_json(const RunConfig& cfg) {
  json ops = json::array();
  for (const auto& op : cfg.operators) {
    json params = json::array();
    for (const auto& p : op.parameters) params.push_back({{"name", p.name}, {"values", p.values}});
    ops.push_back({{"name", op.name}, {"parameters", params}});
  }
  json dataset = {{"synthetic", to_json(cfg.dataset.synthetic)}};
  if (cfg.dataset.directory) dataset["directory"] = *cfg.dataset.directory;

  json offsets = json::array();
  for (const auto& o : cfg.pipeline.glcm.offsets) offsets.push_back({o.dx, o.dy});
  const auto& dc = cfg.pipeline.discretizer;
  const auto& rw = cfg.pipeline.reward;

  return {{"seed", cfg.seed},
          {"output_dir", cfg.output_dir},
          {"trace", cfg.trace},
          {"dataset", dataset},
          {"operators", ops},
          {"learner",
           {{"alpha", cfg.learner.alpha},
            {"gamma", cfg.learner.gamma},
            {"epsilon", cfg.learner.epsilon},
            {"max_steps_per_episode", cfg.learner.max_steps_per_episode},
            {"num_episodes", cfg.learner.num_episodes},
            {"greedy_readout", cfg.learner.readout == GreedyReadout::Start ? "start" : "first_states"}}},
          {"glcm", {{"levels", cfg.pipeline.glcm.levels}, {"offsets", offsets}, {"symmetric", cfg.pipeline.glcm.symmetric}}},
          {"kmeans", {{"max_iters", cfg.pipeline.kmeans.max_iters}, {"tol", cfg.pipeline.kmeans.tol}}},
          {"segmentation",
           {{"min_area", cfg.pipeline.extract.min_area}, {"count_all_clusters", cfg.pipeline.extract.count_all_clusters}}},
          {"discretizer",
           {{"x1_bins", dc.x1_bins},
            {"x2_bins", dc.x2_bins},
            {"x2_max", dc.x2_max},
            {"x3_bins", dc.x3_bins},
            {"x3_max", dc.x3_max},
            {"x4_bins", dc.x4_bins},
            {"x4_max", dc.x4_max}}},
          {"weights", cfg.pipeline.weights.w},
          {"reward",
           {{"eps", rw.eps}, {"delta", rw.delta}, {"r_pos", rw.r_pos}, {"r_zero", rw.r_zero}, {"r_neg", rw.r_neg}}}};
}

}  // namespace qtune
