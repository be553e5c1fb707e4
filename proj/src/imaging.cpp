#include "qtune/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string_view>

#include "qtune/error.hpp"
#include "qtune/fileio.hpp"

namespace qtune {

namespace {

[[noreturn]] void pgm_error(std::size_t offset, const std::string& what) {
  fail(ErrorKind::Parse, "PGM parse error at byte " + std::to_string(offset) + ": " + what);
}

// Skips whitespace and '#' comments, then reads a decimal integer.
std::size_t read_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* field) {
  for (;;) {
    if (pos >= bytes.size()) pgm_error(pos, std::string("unexpected end of header before ") + field);
    const auto c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  if (!std::isdigit(bytes[pos])) pgm_error(pos, std::string("expected digits for ") + field);
  std::size_t value = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (1u << 24)) pgm_error(pos, std::string(field) + " too large");
    ++pos;
  }
  return value;
}

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') pgm_error(0, "missing P5 magic");
  std::size_t pos = 2;
  const std::size_t width = read_header_int(bytes, pos, "width");
  const std::size_t height = read_header_int(bytes, pos, "height");
  const std::size_t header_maxval_pos = pos;
  const std::size_t maxval = read_header_int(bytes, pos, "maxval");
  if (width == 0 || height == 0) pgm_error(header_maxval_pos, "zero image dimension");
  if (maxval != 255) pgm_error(header_maxval_pos, "maxval " + std::to_string(maxval) + " unsupported, need 255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) pgm_error(pos, "expected single whitespace after maxval");
  ++pos;
  const std::size_t need = width * height;
  if (bytes.size() - pos < need)
    pgm_error(bytes.size(), "truncated payload: need " + std::to_string(need) + " bytes, have " +
                                std::to_string(bytes.size() - pos));
  GrayImage img(width, height);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, img.pixels.begin());
  return img;
}

std::vector<std::uint8_t> write_pgm(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

GrayImage read_pgm_file(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return read_pgm(bytes);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

void write_pgm_file(const std::string& path, const GrayImage& image) { write_file_atomic(path, write_pgm(image)); }

GrayImage quantize(const GrayImage& image, int levels) {
  if (levels < 2 || levels > 256) fail(ErrorKind::Config, "quantize: levels must be in [2,256]");
  GrayImage out(image.width, image.height);
  std::transform(image.pixels.begin(), image.pixels.end(), out.pixels.begin(),
                 [levels](std::uint8_t p) { return static_cast<std::uint8_t>((p * levels) / 256); });
  return out;
}

void GlcmConfig::validate() const {
  if (levels < 2 || levels > 256) fail(ErrorKind::Config, "glcm: levels must be in [2,256]");
  if (window < 3 || window % 2 == 0) fail(ErrorKind::Config, "glcm: window must be odd and >= 3, got " + std::to_string(window));
  if (offsets.empty()) fail(ErrorKind::Config, "glcm: offset set is empty");
  for (const auto& o : offsets) {
    if (o.dx == 0 && o.dy == 0) fail(ErrorKind::Config, "glcm: zero offset");
    if (std::abs(o.dx) >= window || std::abs(o.dy) >= window)
      fail(ErrorKind::Config, "glcm: offset does not fit in a window of " + std::to_string(window));
  }
}

Glcm compute_glcm(std::span<const std::uint8_t> window, std::size_t side, const GlcmConfig& cfg) {
  const int G = cfg.levels;
  if (window.size() != side * side) fail(ErrorKind::Contract, "compute_glcm: window buffer is not side x side");
  Glcm g{G, std::vector<double>(static_cast<std::size_t>(G) * G, 0.0)};
  double total = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(side);
  for (const auto& off : cfg.offsets) {
    for (std::ptrdiff_t y = 0; y < n; ++y) {
      const std::ptrdiff_t y2 = y + off.dy;
      if (y2 < 0 || y2 >= n) continue;
      for (std::ptrdiff_t x = 0; x < n; ++x) {
        const std::ptrdiff_t x2 = x + off.dx;
        if (x2 < 0 || x2 >= n) continue;
        const int a = window[static_cast<std::size_t>(y * n + x)];
        const int b = window[static_cast<std::size_t>(y2 * n + x2)];
        if (a >= G || b >= G) fail(ErrorKind::Contract, "compute_glcm: value exceeds quantization levels");
        g.p[static_cast<std::size_t>(a) * G + b] += 1.0;
        total += 1.0;
        if (cfg.symmetric) {
          g.p[static_cast<std::size_t>(b) * G + a] += 1.0;
          total += 1.0;
        }
      }
    }
  }
  if (total == 0.0) fail(ErrorKind::Pipeline, "compute_glcm: window too small for every offset, no pixel pairs");
  for (auto& v : g.p) v /= total;
  return g;
}

HaralickVector haralick(const Glcm& g) {
  const int G = g.levels;
  HaralickVector h;
  double mu_x = 0.0, mu_y = 0.0;
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      const double p = g.at(i, j);
      if (p == 0.0) continue;
      h.asm_ += p * p;
      h.contrast += static_cast<double>((i - j) * (i - j)) * p;
      h.entropy -= p * std::log2(p);
      mu_x += i * p;
      mu_y += j * p;
    }
  }
  double var_x = 0.0, var_y = 0.0, cov = 0.0;
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      const double p = g.at(i, j);
      if (p == 0.0) continue;
      var_x += (i - mu_x) * (i - mu_x) * p;
      var_y += (j - mu_y) * (j - mu_y) * p;
      cov += (i - mu_x) * (j - mu_y) * p;
    }
  }
  const double denom = std::sqrt(var_x * var_y);
  h.correlation = denom > 1e-12 ? std::clamp(cov / denom, -1.0, 1.0) : 0.0;
  // -sum p log p can come out as -0.0 or a hair below zero
  h.entropy = std::max(h.entropy, 0.0);
  return h;
}

std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto m = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t period = 2 * (m - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < m ? i : period - i);
}

namespace {

// Haralick features of a co-occurrence histogram (asymmetric counts).
HaralickVector haralick_from_counts(const std::vector<std::uint32_t>& counts, int G, bool symmetric, double total,
                                    Glcm& scratch) {
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      double c = counts[static_cast<std::size_t>(i) * G + j];
      if (symmetric) c += counts[static_cast<std::size_t>(j) * G + i];
      scratch.p[static_cast<std::size_t>(i) * G + j] = c / total;
    }
  }
  return haralick(scratch);
}

}  // namespace

FeatureMap feature_map(const GrayImage& image, const GlcmConfig& cfg) {
  cfg.validate();
  if (image.width == 0 || image.height == 0) fail(ErrorKind::Contract, "feature_map: empty image");

  const int G = cfg.levels;
  const auto n = static_cast<std::ptrdiff_t>(cfg.window);
  const std::ptrdiff_t half = n / 2;
  const GrayImage q = quantize(image, G);
  const auto W = static_cast<std::ptrdiff_t>(image.width);
  const auto H = static_cast<std::ptrdiff_t>(image.height);

  // Padded quantized image; the pad is wide enough for window plus offset.
  std::ptrdiff_t max_off = 0;
  for (const auto& o : cfg.offsets) max_off = std::max({max_off, static_cast<std::ptrdiff_t>(std::abs(o.dx)),
                                                        static_cast<std::ptrdiff_t>(std::abs(o.dy))});
  const std::ptrdiff_t pad = half + max_off;
  const std::ptrdiff_t PW = W + 2 * pad;
  const std::ptrdiff_t PH = H + 2 * pad;
  std::vector<std::uint8_t> padded(static_cast<std::size_t>(PW * PH));
  for (std::ptrdiff_t y = 0; y < PH; ++y) {
    const std::size_t sy = mirror_index(y - pad, image.height);
    for (std::ptrdiff_t x = 0; x < PW; ++x) {
      padded[static_cast<std::size_t>(y * PW + x)] = q.at(mirror_index(x - pad, image.width), sy);
    }
  }

  // Pair code at each anchor for each offset: a * G + b, or -1 if b lies off the padded grid.
  struct OffsetPlan {
    Offset off;
    std::ptrdiff_t ax0, ax1, ay0, ay1;  // anchor rectangle relative to window top-left, inclusive
    std::vector<int> code;
  };
  std::vector<OffsetPlan> plans;
  double total = 0.0;
  for (const auto& o : cfg.offsets) {
    OffsetPlan plan{o, std::max<std::ptrdiff_t>(0, -o.dx), n - 1 - std::max<std::ptrdiff_t>(0, o.dx),
                    std::max<std::ptrdiff_t>(0, -o.dy), n - 1 - std::max<std::ptrdiff_t>(0, o.dy), {}};
    plan.code.assign(static_cast<std::size_t>(PW * PH), -1);
    for (std::ptrdiff_t y = 0; y < PH; ++y) {
      const std::ptrdiff_t y2 = y + o.dy;
      if (y2 < 0 || y2 >= PH) continue;
      for (std::ptrdiff_t x = 0; x < PW; ++x) {
        const std::ptrdiff_t x2 = x + o.dx;
        if (x2 < 0 || x2 >= PW) continue;
        plan.code[static_cast<std::size_t>(y * PW + x)] =
            padded[static_cast<std::size_t>(y * PW + x)] * G + padded[static_cast<std::size_t>(y2 * PW + x2)];
      }
    }
    total += static_cast<double>((plan.ax1 - plan.ax0 + 1) * (plan.ay1 - plan.ay0 + 1));
    plans.push_back(std::move(plan));
  }
  if (cfg.symmetric) total *= 2.0;

  FeatureMap fm;
  fm.width = image.width;
  fm.height = image.height;
  fm.levels = G;
  for (auto& c : fm.channels) c.assign(image.size(), 0.0);

  std::vector<std::uint32_t> counts(static_cast<std::size_t>(G) * G);
  Glcm scratch{G, std::vector<double>(static_cast<std::size_t>(G) * G)};

  // Window for output pixel (x, y) has its top-left at padded (x + pad - half, y + pad - half).
  const std::ptrdiff_t origin = pad - half;
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    std::fill(counts.begin(), counts.end(), 0u);
    const std::ptrdiff_t wy = y + origin;
    const std::ptrdiff_t wx0 = origin;
    for (const auto& plan : plans) {
      for (std::ptrdiff_t ay = wy + plan.ay0; ay <= wy + plan.ay1; ++ay)
        for (std::ptrdiff_t ax = wx0 + plan.ax0; ax <= wx0 + plan.ax1; ++ax)
          ++counts[static_cast<std::size_t>(plan.code[static_cast<std::size_t>(ay * PW + ax)])];
    }
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      if (x > 0) {
        const std::ptrdiff_t wx = x + origin;
        for (const auto& plan : plans) {
          const std::ptrdiff_t out_col = wx - 1 + plan.ax0;
          const std::ptrdiff_t in_col = wx + plan.ax1;
          for (std::ptrdiff_t ay = wy + plan.ay0; ay <= wy + plan.ay1; ++ay) {
            --counts[static_cast<std::size_t>(plan.code[static_cast<std::size_t>(ay * PW + out_col)])];
            ++counts[static_cast<std::size_t>(plan.code[static_cast<std::size_t>(ay * PW + in_col)])];
          }
        }
      }
      const HaralickVector h = haralick_from_counts(counts, G, cfg.symmetric, total, scratch);
      const auto idx = static_cast<std::size_t>(y * W + x);
      fm.channels[0][idx] = h.asm_;
      fm.channels[1][idx] = h.contrast;
      fm.channels[2][idx] = h.correlation;
      fm.channels[3][idx] = h.entropy;
    }
  }
  return fm;
}

std::array<double, 4> normalized_channels(const FeatureMap& fm, std::size_t pixel) {
  const double g1 = fm.levels - 1.0;
  const double max_entropy = 2.0 * std::log2(static_cast<double>(fm.levels));
  return {fm.channels[0][pixel], fm.channels[1][pixel] / (g1 * g1), (fm.channels[2][pixel] + 1.0) / 2.0,
          fm.channels[3][pixel] / max_entropy};
}

void write_feature_map_csv(const FeatureMap& fm, const std::string& prefix) {
  static constexpr std::array<const char*, 4> kNames{"asm", "contrast", "correlation", "entropy"};
  for (std::size_t c = 0; c < FeatureMap::kChannels; ++c) {
    std::string text;
    char buf[32];
    for (std::size_t y = 0; y < fm.height; ++y) {
      for (std::size_t x = 0; x < fm.width; ++x) {
        if (x) text += ',';
        std::snprintf(buf, sizeof buf, "%.17g", fm.at(c, x, y));
        text += buf;
      }
      text += '\n';
    }
    write_file_atomic(prefix + "_" + kNames[c] + ".csv", text);
  }
}

}  // namespace qtune
