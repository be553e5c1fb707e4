#include "qtune/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <regex>

#include "qtune/error.hpp"
#include "qtune/fileio.hpp"
#include "qtune/random.hpp"
#include "qtune/segmenter.hpp"

namespace qtune {

namespace fs = std::filesystem;

void SyntheticConfig::validate() const {
  if (width == 0 || height == 0) fail(ErrorKind::Config, "synthetic: image dimensions must be positive");
  if (!(radius_min >= 1.0) || radius_max < radius_min)
    fail(ErrorKind::Config, "synthetic: radius range must satisfy 1 <= radius_min <= radius_max");
  const double room = 2.0 * (radius_max + static_cast<double>(margin)) + 1.0;
  if (room > static_cast<double>(std::min(width, height)))
    fail(ErrorKind::Config, "synthetic: disc of radius " + std::to_string(radius_max) + " with margin " +
                                std::to_string(margin) + " does not fit in " + std::to_string(width) + "x" +
                                std::to_string(height));
  for (const auto* t : {&background, &disc}) {
    if (t->freq_max < t->freq_min || t->angle_max < t->angle_min)
      fail(ErrorKind::Config, "synthetic: texture ranges must be ordered (min <= max)");
    if (t->freq_min < 0.0 || t->amplitude < 0.0) fail(ErrorKind::Config, "synthetic: negative texture parameter");
  }
  if (noise < 0.0) fail(ErrorKind::Config, "synthetic: negative noise amplitude");
}

namespace {

struct Grating {
  double freq, cos_a, sin_a, phase, amplitude, mean;

  static Grating draw(const TextureFamily& t, Rng& rng) {
    const double f = rng.uniform(t.freq_min, t.freq_max);
    const double a = rng.uniform(t.angle_min, t.angle_max);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return {f, std::cos(a), std::sin(a), phase, t.amplitude, t.mean};
  }

  double at(double x, double y) const {
    return mean + amplitude * std::sin(2.0 * std::numbers::pi * freq * (x * cos_a + y * sin_a) + phase);
  }
};

Sample generate_one(const SyntheticConfig& cfg, std::size_t index) {
  Rng rng(mix_seed(cfg.seed, index));
  const double r = rng.uniform(cfg.radius_min, cfg.radius_max);
  const double lo_x = r + static_cast<double>(cfg.margin);
  const double hi_x = static_cast<double>(cfg.width - 1) - lo_x;
  const double lo_y = r + static_cast<double>(cfg.margin);
  const double hi_y = static_cast<double>(cfg.height - 1) - lo_y;
  const double cx = std::round(rng.uniform(lo_x, hi_x));
  const double cy = std::round(rng.uniform(lo_y, hi_y));
  const Grating bg = Grating::draw(cfg.background, rng);
  const Grating fg = Grating::draw(cfg.disc, rng);

  char id[16];
  std::snprintf(id, sizeof id, "img_%03zu", index);
  Sample s{id, GrayImage(cfg.width, cfg.height), BinaryMask(cfg.width, cfg.height, 0), DiscGeometry{cx, cy, r}};
  for (std::size_t y = 0; y < cfg.height; ++y) {
    for (std::size_t x = 0; x < cfg.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const bool inside = dx * dx + dy * dy <= r * r;
      const double v = (inside ? fg : bg).at(static_cast<double>(x), static_cast<double>(y)) +
                       rng.uniform(-cfg.noise, cfg.noise);
      s.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      if (inside) s.mask.at(x, y) = 255;
    }
  }
  return s;
}

}  // namespace

std::vector<Sample> generate_dataset(const SyntheticConfig& cfg) {
  cfg.validate();
  std::vector<Sample> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) out.push_back(generate_one(cfg, i));
  return out;
}

void validate_sample(const Sample& s) {
  if (s.mask.width != s.image.width || s.mask.height != s.image.height)
    fail(ErrorKind::Dataset, "sample '" + s.id + "': mask and image dimensions differ");
  if (s.image.width == 0 || s.image.height == 0) fail(ErrorKind::Dataset, "sample '" + s.id + "': empty image");
  const auto comps = connected_components(s.mask);
  if (comps.empty()) fail(ErrorKind::Dataset, "sample '" + s.id + "': ground-truth mask is empty");
  if (comps.size() != 1)
    fail(ErrorKind::Dataset, "sample '" + s.id + "': ground-truth mask has " + std::to_string(comps.size()) +
                                 " connected components, expected exactly one object");
}

std::vector<Sample> load_dataset(const std::string& directory) {
  if (!fs::is_directory(directory)) fail(ErrorKind::Dataset, "dataset directory '" + directory + "' does not exist");
  static const std::regex image_re(R"(img_(\d{3,})\.pgm)");
  static const std::regex mask_re(R"(img_(\d{3,})_mask\.pgm)");
  std::map<std::string, std::pair<fs::path, fs::path>> pairs;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, mask_re)) {
      pairs["img_" + m[1].str()].second = entry.path();
    } else if (std::regex_match(name, m, image_re)) {
      pairs["img_" + m[1].str()].first = entry.path();
    }
  }

  std::vector<Sample> out;
  for (const auto& [id, files] : pairs) {
    if (files.first.empty()) fail(ErrorKind::Dataset, "mask '" + files.second.string() + "' has no matching image");
    if (files.second.empty()) fail(ErrorKind::Dataset, "image '" + files.first.string() + "' has no matching mask");
    Sample s;
    s.id = id;
    try {
      s.image = read_pgm_file(files.first.string());
      s.mask = read_pgm_file(files.second.string());
    } catch (const Error& e) {
      fail(ErrorKind::Dataset, e.what());
    }
    for (auto& p : s.mask.pixels) p = p ? 255 : 0;
    try {
      validate_sample(s);
    } catch (const Error& e) {
      fail(ErrorKind::Dataset, files.second.string() + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(const std::string& directory, const std::vector<Sample>& samples, const std::string& manifest_json) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) fail(ErrorKind::Io, "cannot create dataset directory '" + directory + "': " + ec.message());
  const fs::path dir(directory);
  for (const auto& s : samples) {
    write_pgm_file((dir / (s.id + ".pgm")).string(), s.image);
    write_pgm_file((dir / (s.id + "_mask.pgm")).string(), s.mask);
  }
  write_file_atomic((dir / "manifest.json").string(), manifest_json);
}

}  // namespace qtune
