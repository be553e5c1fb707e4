#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qtune {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::size_t size() const noexcept { return pixels.size(); }

  bool operator==(const GrayImage&) const = default;
};

/// Binary masks share the raster type; any nonzero pixel is "set".
using BinaryMask = GrayImage;

/// Binary P5 with maxval 255. Errors carry the byte offset of the problem.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pgm(const GrayImage& image);

GrayImage read_pgm_file(const std::string& path);
void write_pgm_file(const std::string& path, const GrayImage& image);

/// Maps p to floor(p * levels / 256). Requires levels in [2, 256].
GrayImage quantize(const GrayImage& image, int levels);

struct Offset {
  int dx = 0;
  int dy = 0;
  bool operator==(const Offset&) const = default;
};

struct GlcmConfig {
  int levels = 8;
  std::vector<Offset> offsets{{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  bool symmetric = true;
  int window = 9;

  /// Throws Error{Config} on levels outside [2,256], an even or < 3 window,
  /// an empty offset set or a zero offset.
  void validate() const;
};

/// Normalized G x G co-occurrence matrix, row-major.
struct Glcm {
  int levels = 0;
  std::vector<double> p;

  double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

/// Co-occurrence counts over every in-window pixel pair for every offset,
/// normalized to sum 1. `window` holds quantized levels, side x side.
/// Throws Error{Pipeline} if no pair fits inside the window.
Glcm compute_glcm(std::span<const std::uint8_t> window, std::size_t side, const GlcmConfig& cfg);

struct HaralickVector {
  double asm_ = 0.0;          // angular second moment (energy)
  double contrast = 0.0;
  double correlation = 0.0;   // 0 when either marginal has zero variance
  double entropy = 0.0;       // bits
};

HaralickVector haralick(const Glcm& g);

/// Four per-pixel planes: asm, contrast, correlation, entropy.
struct FeatureMap {
  static constexpr std::size_t kChannels = 4;

  std::size_t width = 0;
  std::size_t height = 0;
  int levels = 8;
  std::array<std::vector<double>, kChannels> channels;

  double at(std::size_t channel, std::size_t x, std::size_t y) const { return channels[channel][y * width + x]; }
  std::size_t size() const noexcept { return width * height; }
};

/// Haralick vector of the window centered at each pixel, computed on the
/// quantized image with mirror padding. Uses a sliding histogram; equals the
/// per-pixel naive computation.
FeatureMap feature_map(const GrayImage& image, const GlcmConfig& cfg);

/// Maps the four channels onto [0,1]: asm as-is, contrast / (G-1)^2,
/// (correlation + 1) / 2, entropy / (2 log2 G).
std::array<double, 4> normalized_channels(const FeatureMap& fm, std::size_t pixel);

/// Reflect-101 index into [0, n): -1 -> 1, n -> n-2.
std::size_t mirror_index(std::ptrdiff_t i, std::size_t n);

/// Writes <prefix>_asm.csv, _contrast.csv, _correlation.csv, _entropy.csv.
void write_feature_map_csv(const FeatureMap& fm, const std::string& prefix);

}  // namespace qtune
