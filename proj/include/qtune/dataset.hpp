#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtune/imaging.hpp"

namespace qtune {

/// Oriented sinusoidal grating plus uniform noise, parameters drawn per image.
struct TextureFamily {
  double freq_min = 0.0;   // cycles per pixel
  double freq_max = 0.0;
  double angle_min = 0.0;  // radians
  double angle_max = 0.0;
  double amplitude = 0.0;  // gray levels
  double mean = 128.0;
};

struct SyntheticConfig {
  std::size_t count = 30;
  std::size_t width = 128;
  std::size_t height = 128;
  double radius_min = 16.0;
  double radius_max = 28.0;
  /// Minimum gap between the disc and the image border.
  std::size_t margin = 11;
  TextureFamily background{0.30, 0.35, 0.0, 3.14159265358979, 90.0, 128.0};
  TextureFamily disc{0.09, 0.10, 0.0, 3.14159265358979, 90.0, 128.0};
  double noise = 60.0;
  std::uint64_t seed = 42;

  /// Throws Error{Config} on infeasible geometry or inverted ranges.
  void validate() const;
};

struct DiscGeometry {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

struct Sample {
  std::string id;
  GrayImage image;
  BinaryMask mask;
  std::optional<DiscGeometry> disc;  // set for generated samples
};

/// Deterministic in cfg.seed; sample i draws from a stream seeded by (seed, i).
std::vector<Sample> generate_dataset(const SyntheticConfig& cfg);

/// Throws Error{Dataset} naming the sample when the mask is empty, not a
/// single 8-connected component, or sized differently from the image.
void validate_sample(const Sample& s);

/// Reads img_NNN.pgm / img_NNN_mask.pgm pairs sorted by id.
std::vector<Sample> load_dataset(const std::string& directory);

/// Writes the pairs and `manifest_json` as manifest.json.
void save_dataset(const std::string& directory, const std::vector<Sample>& samples, const std::string& manifest_json);

}  // namespace qtune
