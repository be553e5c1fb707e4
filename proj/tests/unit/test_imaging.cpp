#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "qtune/dataset.hpp"
#include "qtune/error.hpp"
#include "qtune/imaging.hpp"
#include "qtune/random.hpp"

using namespace qtune;

namespace {

GrayImage random_image(std::size_t w, std::size_t h, Rng& rng, int max_value = 256) {
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(max_value));
  return img;
}

// Independent co-occurrence oracle: a map of pair counts built directly from
// the definition, without sharing any code with the library.
std::vector<double> oracle_glcm(const std::vector<int>& win, int side, int G, const std::vector<Offset>& offs,
                                bool symmetric) {
  std::map<std::pair<int, int>, double> counts;
  double total = 0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (const auto& o : offs) {
        int x2 = x + o.dx, y2 = y + o.dy;
        if (x2 < 0 || y2 < 0 || x2 >= side || y2 >= side) continue;
        int a = win[y * side + x], b = win[y2 * side + x2];
        counts[{a, b}] += 1;
        total += 1;
        if (symmetric) {
          counts[{b, a}] += 1;
          total += 1;
        }
      }
  std::vector<double> p(static_cast<std::size_t>(G * G), 0.0);
  for (auto& [k, c] : counts) p[static_cast<std::size_t>(k.first * G + k.second)] = c / total;
  return p;
}

std::size_t reflect(long i, long n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return static_cast<std::size_t>(i);
}

HaralickVector naive_pixel(const GrayImage& q, std::size_t px, std::size_t py, const GlcmConfig& cfg) {
  const int h = cfg.window / 2;
  std::vector<std::uint8_t> win;
  for (int dy = -h; dy <= h; ++dy)
    for (int dx = -h; dx <= h; ++dx)
      win.push_back(q.at(reflect(static_cast<long>(px) + dx, static_cast<long>(q.width)),
                         reflect(static_cast<long>(py) + dy, static_cast<long>(q.height))));
  return haralick(compute_glcm(win, static_cast<std::size_t>(cfg.window), cfg));
}

}  // namespace

TEST(Pgm, OnePixelBytes) {
  GrayImage img(1, 1, 0);
  auto bytes = write_pgm(img);
  const std::string expected = std::string("P5\n1 1\n255\n") + '\0';
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), expected);
  EXPECT_EQ(read_pgm(bytes), img);
}

TEST(Pgm, RandomRoundTrip) {
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    auto img = random_image(64, 64, rng);
    EXPECT_EQ(read_pgm(write_pgm(img)), img);
  }
}

TEST(Pgm, CommentsInHeader) {
  std::string s = "P5 # magic\n# whole line\n2 1\n255\nab";
  auto img = read_pgm(std::vector<std::uint8_t>(s.begin(), s.end()));
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.at(1, 0), 'b');
}

TEST(Pgm, RejectsMalformedInput) {
  auto parse = [](const std::string& s) { return read_pgm(std::vector<std::uint8_t>(s.begin(), s.end())); };
  auto expect_parse_error = [&](const std::string& s) {
    try {
      parse(s);
      ADD_FAILURE() << "accepted: " << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse);
      EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
    }
  };
  expect_parse_error(std::string("P5\n1 1\n65535\n") + std::string(2, '\0'));
  expect_parse_error("P2\n1 1\n255\n0");
  expect_parse_error("P5\n2 2\n255\nabc");
  expect_parse_error("P5\nx 2\n255\n");
  expect_parse_error("");
}

TEST(Quantize, Examples) {
  GrayImage img(3, 1);
  img.pixels = {0, 255, 128};
  auto q = quantize(img, 8);
  EXPECT_EQ(q.pixels, (std::vector<std::uint8_t>{0, 7, 4}));
}

TEST(Quantize, MonotoneAndInRange) {
  GrayImage img(256, 1);
  for (int p = 0; p < 256; ++p) img.pixels[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(p);
  for (int G : {2, 3, 8, 17, 256}) {
    auto q = quantize(img, G);
    for (int p = 0; p < 256; ++p) {
      EXPECT_EQ(q.pixels[static_cast<std::size_t>(p)], p * G / 256);
      if (p) EXPECT_GE(q.pixels[static_cast<std::size_t>(p)], q.pixels[static_cast<std::size_t>(p - 1)]);
    }
  }
}

TEST(Glcm, ConstantWindow) {
  GlcmConfig cfg;
  std::vector<std::uint8_t> win(81, 5);
  auto g = compute_glcm(win, 9, cfg);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_EQ(g.at(i, j), (i == 5 && j == 5) ? 1.0 : 0.0);
  auto h = haralick(g);
  EXPECT_EQ(h.asm_, 1.0);
  EXPECT_EQ(h.contrast, 0.0);
  EXPECT_EQ(h.entropy, 0.0);
  EXPECT_EQ(h.correlation, 0.0);
}

TEST(Glcm, CheckerboardHorizontal) {
  GlcmConfig cfg;
  cfg.levels = 2;
  cfg.offsets = {{1, 0}};
  std::vector<std::uint8_t> win{0, 1, 1, 0};
  auto g = compute_glcm(win, 2, cfg);
  EXPECT_DOUBLE_EQ(g.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.at(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.at(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(g.at(1, 0), 0.5);
  auto h = haralick(g);
  EXPECT_NEAR(h.contrast, 1.0, 1e-12);
  EXPECT_NEAR(h.correlation, -1.0, 1e-12);
}

TEST(Glcm, ErrorsOnBadInput) {
  GlcmConfig cfg;
  cfg.offsets = {{3, 0}};
  std::vector<std::uint8_t> win(9, 0);
  try {
    compute_glcm(win, 3, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Pipeline);
  }
  EXPECT_THROW(compute_glcm(std::vector<std::uint8_t>(8, 0), 3, GlcmConfig{}), Error);
}

TEST(Glcm, RandomWindowsMatchOracleAndInvariants) {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    GlcmConfig cfg;
    cfg.levels = 2 + static_cast<int>(rng.index(15));
    cfg.window = 3 + 2 * static_cast<int>(rng.index(5));
    cfg.symmetric = rng.index(4) != 0;
    const int side = cfg.window, G = cfg.levels;
    std::vector<std::uint8_t> win(static_cast<std::size_t>(side * side));
    std::vector<int> iwin(win.size());
    for (std::size_t i = 0; i < win.size(); ++i) iwin[i] = win[i] = static_cast<std::uint8_t>(rng.index(G));
    auto g = compute_glcm(win, static_cast<std::size_t>(side), cfg);
    auto oracle = oracle_glcm(iwin, side, G, cfg.offsets, cfg.symmetric);
    double sum = 0;
    for (int i = 0; i < G; ++i)
      for (int j = 0; j < G; ++j) {
        ASSERT_GE(g.at(i, j), 0.0);
        ASSERT_NEAR(g.at(i, j), oracle[static_cast<std::size_t>(i * G + j)], 1e-12);
        if (cfg.symmetric) ASSERT_EQ(g.at(i, j), g.at(j, i));
        sum += g.at(i, j);
      }
    ASSERT_NEAR(sum, 1.0, 1e-9);

    auto h = haralick(g);
    ASSERT_GT(h.asm_, 0.0);
    ASSERT_LE(h.asm_, 1.0);
    ASSERT_GE(h.contrast, 0.0);
    ASSERT_LE(h.contrast, (G - 1.0) * (G - 1.0));
    ASSERT_GE(h.correlation, -1.0);
    ASSERT_LE(h.correlation, 1.0);
    ASSERT_GE(h.entropy, 0.0);
    ASSERT_LE(h.entropy, 2.0 * std::log2(G) + 1e-12);
  }
}

TEST(Haralick, UniformMatrix) {
  Glcm g{8, std::vector<double>(64, 1.0 / 64)};
  auto h = haralick(g);
  EXPECT_NEAR(h.asm_, 1.0 / 64, 1e-15);
  EXPECT_NEAR(h.entropy, 6.0, 1e-12);
  EXPECT_NEAR(h.correlation, 0.0, 1e-12);
}

TEST(Haralick, SingleOffDiagonalEntry) {
  Glcm g{4, std::vector<double>(16, 0.0)};
  g.p[1 * 4 + 3] = 1.0;
  auto h = haralick(g);
  EXPECT_EQ(h.asm_, 1.0);
  EXPECT_EQ(h.contrast, 4.0);
  EXPECT_EQ(h.entropy, 0.0);
  EXPECT_EQ(h.correlation, 0.0);
}

TEST(Haralick, CorrelationMatchesHandComputation) {
  // p(0,0)=0.5, p(1,1)=0.25, p(0,1)=0.25: mu_x=0.25, mu_y=0.5,
  // var_x=0.1875, var_y=0.25, cov=0.125 -> 0.125/sqrt(0.046875).
  Glcm g{2, {0.5, 0.25, 0.0, 0.25}};
  auto h = haralick(g);
  EXPECT_NEAR(h.correlation, 0.125 / std::sqrt(0.1875 * 0.25), 1e-12);
  EXPECT_NEAR(h.contrast, 0.25, 1e-15);
  EXPECT_NEAR(h.entropy, 1.5, 1e-12);
  EXPECT_NEAR(h.asm_, 0.375, 1e-15);
}

TEST(Mirror, Reflect101) {
  EXPECT_EQ(mirror_index(-1, 5), 1u);
  EXPECT_EQ(mirror_index(-4, 5), 4u);
  EXPECT_EQ(mirror_index(5, 5), 3u);
  EXPECT_EQ(mirror_index(2, 5), 2u);
  EXPECT_EQ(mirror_index(-3, 1), 0u);
  for (long i = -40; i < 40; ++i)
    for (long n : {1L, 2L, 3L, 7L}) EXPECT_EQ(mirror_index(i, static_cast<std::size_t>(n)), reflect(i, n));
}

TEST(FeatureMap, ConstantImage) {
  GrayImage img(20, 13, 77);
  GlcmConfig cfg;
  cfg.window = 11;
  auto fm = feature_map(img, cfg);
  ASSERT_EQ(fm.width, 20u);
  ASSERT_EQ(fm.height, 13u);
  for (std::size_t i = 0; i < fm.size(); ++i) {
    EXPECT_EQ(fm.channels[0][i], 1.0);
    EXPECT_EQ(fm.channels[1][i], 0.0);
    EXPECT_EQ(fm.channels[2][i], 0.0);
    EXPECT_EQ(fm.channels[3][i], 0.0);
  }
}

TEST(FeatureMap, TwoHalvesInteriorIsConstantCase) {
  GrayImage img(40, 20);
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x < 40; ++x) img.at(x, y) = x < 20 ? 10 : 200;
  GlcmConfig cfg;
  cfg.window = 9;
  auto fm = feature_map(img, cfg);
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x : {0u, 5u, 15u, 24u, 30u, 39u}) {
      EXPECT_EQ(fm.at(0, x, y), 1.0) << x;
      EXPECT_EQ(fm.at(1, x, y), 0.0) << x;
      EXPECT_EQ(fm.at(3, x, y), 0.0) << x;
    }
  EXPECT_GT(fm.at(1, 19, 10), 0.0);
}

TEST(FeatureMap, EqualsNaivePerPixelComputation) {
  Rng rng(11);
  for (int t = 0; t < 12; ++t) {
    GlcmConfig cfg;
    cfg.window = 3 + 2 * static_cast<int>(rng.index(5));
    cfg.levels = t % 3 == 0 ? 4 : 8;
    cfg.symmetric = t % 4 != 3;
    if (t % 5 == 4) cfg.offsets = {{2, 0}, {0, 2}, {-2, 1}};
    auto img = random_image(16, 16, rng, t % 2 ? 256 : 64);
    auto fm = feature_map(img, cfg);
    auto q = quantize(img, cfg.levels);
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        auto h = naive_pixel(q, x, y, cfg);
        ASSERT_NEAR(fm.at(0, x, y), h.asm_, 1e-9);
        ASSERT_NEAR(fm.at(1, x, y), h.contrast, 1e-9);
        ASSERT_NEAR(fm.at(2, x, y), h.correlation, 1e-9);
        ASSERT_NEAR(fm.at(3, x, y), h.entropy, 1e-9);
      }
  }
}

TEST(FeatureMap, NonSquareAndTinyImages) {
  Rng rng(5);
  GlcmConfig cfg;
  cfg.window = 7;
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 2}, {17, 5}}) {
    auto img = random_image(w, h, rng);
    auto fm = feature_map(img, cfg);
    auto q = quantize(img, cfg.levels);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        auto hv = naive_pixel(q, x, y, cfg);
        ASSERT_NEAR(fm.at(1, x, y), hv.contrast, 1e-9);
        ASSERT_NEAR(fm.at(3, x, y), hv.entropy, 1e-9);
      }
  }
}

TEST(FeatureMap, TranslationByPeriod) {
  const std::size_t period = 6;
  auto pattern = [](std::size_t x, std::size_t y) {
    return static_cast<std::uint8_t>(((x % period) * 40 + (y % 4) * 23) % 256);
  };
  GrayImage a(48, 40), b(48, 40);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 48; ++x) {
      a.at(x, y) = pattern(x, y);
      b.at(x, y) = pattern(x + period, y);
    }
  GlcmConfig cfg;
  cfg.window = 9;
  auto fa = feature_map(a, cfg), fb = feature_map(b, cfg);
  for (std::size_t y = 5; y < 35; ++y)
    for (std::size_t x = 5; x < 43; ++x)
      for (std::size_t c = 0; c < 4; ++c) ASSERT_NEAR(fa.at(c, x, y), fb.at(c, x, y), 1e-9);
}

TEST(FeatureMap, WindowSizeChangesTheMap) {
  SyntheticConfig sc;
  sc.count = 1;
  sc.width = sc.height = 64;
  sc.radius_min = 14;
  sc.radius_max = 20;
  auto s = generate_dataset(sc);
  GlcmConfig c9, c21;
  c9.window = 9;
  c21.window = 21;
  auto f9 = feature_map(s[0].image, c9), f21 = feature_map(s[0].image, c21);
  double maxdiff = 0;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < f9.size(); ++i)
      maxdiff = std::max(maxdiff, std::abs(f9.channels[c][i] - f21.channels[c][i]));
  EXPECT_GT(maxdiff, 0.0);
}

TEST(FeatureMap, NormalizedChannelsOfConstantPixel) {
  GrayImage img(9, 9, 0);
  auto fm = feature_map(img, GlcmConfig{});
  auto n = normalized_channels(fm, 40);
  EXPECT_EQ(n[0], 1.0);
  EXPECT_EQ(n[1], 0.0);
  EXPECT_EQ(n[2], 0.5);
  EXPECT_EQ(n[3], 0.0);
}

TEST(GlcmConfig, Validation) {
  GlcmConfig c;
  EXPECT_NO_THROW(c.validate());
  c.window = 8;
  EXPECT_THROW(c.validate(), Error);
  c.window = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.levels = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.offsets = {{0, 0}};
  EXPECT_THROW(c.validate(), Error);
  c.offsets = {};
  EXPECT_THROW(c.validate(), Error);
}
