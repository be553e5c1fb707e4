#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "qtune/error.hpp"
#include "qtune/random.hpp"
#include "qtune/segmenter.hpp"

using namespace qtune;

namespace {

PointSet random_points(std::size_t n, std::size_t dim, Rng& rng) {
  PointSet ps{dim, {}};
  for (std::size_t i = 0; i < n * dim; ++i) ps.data.push_back(rng.uniform(-5, 5));
  return ps;
}

double sq(const double* a, const double* b, std::size_t d) {
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Flood-fill oracle for 8-connected labelling.
std::vector<int> flood_labels(const BinaryMask& m) {
  std::vector<int> lab(m.size(), -1);
  int next = 0;
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m.pixels[start] || lab[start] >= 0) continue;
    std::vector<std::size_t> stack{start};
    lab[start] = next;
    while (!stack.empty()) {
      auto p = stack.back();
      stack.pop_back();
      long x = static_cast<long>(p % m.width), y = static_cast<long>(p / m.width);
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          long nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<long>(m.width) || ny >= static_cast<long>(m.height)) continue;
          auto q = static_cast<std::size_t>(ny) * m.width + static_cast<std::size_t>(nx);
          if (m.pixels[q] && lab[q] < 0) {
            lab[q] = next;
            stack.push_back(q);
          }
        }
    }
    ++next;
  }
  return lab;
}

Labeling labeling_from(const BinaryMask& m) {
  Labeling lab{m.width, m.height, 2, {}};
  for (auto p : m.pixels) lab.labels.push_back(p ? 1 : 0);
  return lab;
}

BinaryMask rect(std::size_t w, std::size_t h, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) {
  BinaryMask m(w, h, 0);
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x) m.at(x, y) = 255;
  return m;
}

}  // namespace

TEST(Normalize, ConstantChannelBecomesZero) {
  FeatureMap fm;
  fm.width = 2;
  fm.height = 1;
  fm.channels = {std::vector<double>{3, 3}, {0, 2}, {1, 1}, {5, 5}};
  auto ps = normalize_features(fm);
  ASSERT_EQ(ps.dim, 4u);
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps.point(0)[0], 0.0);
  EXPECT_EQ(ps.point(0)[1], -1.0);
  EXPECT_EQ(ps.point(1)[1], 1.0);
}

TEST(Normalize, MeanZeroVarianceOne) {
  Rng rng(4);
  FeatureMap fm;
  fm.width = 17;
  fm.height = 9;
  for (auto& c : fm.channels)
    for (std::size_t i = 0; i < fm.size(); ++i) c.push_back(rng.uniform(-3, 100));
  auto ps = normalize_features(fm);
  for (std::size_t d = 0; d < 4; ++d) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) m += ps.point(i)[d];
    m /= static_cast<double>(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) v += (ps.point(i)[d] - m) * (ps.point(i)[d] - m);
    v /= static_cast<double>(ps.size());
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(KMeans, SingleClusterIsTheMean) {
  Rng rng(8);
  auto ps = random_points(50, 3, rng);
  auto r = kmeans(ps, {1, 100, 1e-6, 0});
  std::vector<double> mean(3, 0.0);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t d = 0; d < 3; ++d) mean[d] += ps.point(i)[d] / 50.0;
  double total = 0;
  for (std::size_t i = 0; i < 50; ++i) total += sq(ps.point(i), mean.data(), 3);
  for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(r.centroids.point(0)[d], mean[d], 1e-12);
  EXPECT_NEAR(r.inertia, total, 1e-9);
}

TEST(KMeans, TwoSeparatedBlobs) {
  Rng rng(9);
  PointSet ps{2, {}};
  std::vector<int> truth;
  for (int i = 0; i < 200; ++i) {
    const bool right = rng.index(2);
    ps.data.push_back((right ? 100.0 : 0.0) + rng.uniform(-1, 1));
    ps.data.push_back(rng.uniform(-1, 1));
    truth.push_back(right);
  }
  auto r = kmeans(ps, {2, 100, 1e-6, 0});
  const int flip = r.assignments[0] != truth[0];
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_EQ(r.assignments[i], truth[i] ^ flip);
}

TEST(KMeans, InertiaNonIncreasingAndFixedPoint) {
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 10 + rng.index(200), dim = 1 + rng.index(4);
    auto ps = random_points(n, dim, rng);
    const int k = 1 + static_cast<int>(rng.index(std::min<std::size_t>(n, 6)));
    auto r = kmeans(ps, {k, 100, 0.0, 0});
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
      ASSERT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-9);
    // nearest-centroid fixed point and consistent inertia
    double inertia = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = INFINITY;
      for (int c = 0; c < k; ++c) {
        double d = sq(ps.point(i), r.centroids.point(static_cast<std::size_t>(c)), dim);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      ASSERT_EQ(r.assignments[i], best);
      inertia += bd;
    }
    ASSERT_NEAR(r.inertia, inertia, 1e-9 * (1 + inertia));
  }
}

TEST(KMeans, DeterministicBitForBit) {
  Rng rng(12);
  auto ps = random_points(300, 4, rng);
  auto a = kmeans(ps, {4, 100, 1e-6, 5});
  auto b = kmeans(ps, {4, 100, 1e-6, 5});
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.centroids.data, b.centroids.data);
  EXPECT_EQ(a.inertia_history, b.inertia_history);
}

TEST(KMeans, DuplicatePointsFillEveryCluster) {
  PointSet ps{1, {0, 0, 0, 0, 1}};
  auto r = kmeans(ps, {3, 100, 1e-6, 0});
  EXPECT_EQ(r.assignments.size(), 5u);
  for (int a : r.assignments) EXPECT_LT(a, 3);
  EXPECT_NEAR(r.inertia, 0.0, 1e-12);
}

TEST(KMeans, TooFewPointsIsConfigError) {
  PointSet ps{2, {0, 0, 1, 1}};
  try {
    kmeans(ps, {3, 100, 1e-6, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Components, EmptyFullDiagonal) {
  EXPECT_TRUE(connected_components(BinaryMask(5, 4, 0)).empty());
  auto full = connected_components(BinaryMask(5, 4, 1));
  ASSERT_EQ(full.size(), 1u);
  EXPECT_EQ(full[0].area, 20u);
  BinaryMask diag(3, 3, 0);
  diag.at(0, 0) = 1;
  diag.at(1, 1) = 1;
  auto d = connected_components(diag);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].area, 2u);
  EXPECT_EQ(d[0].bbox, (BoundingBox{0, 0, 1, 1}));
}

TEST(Components, PartitionMatchesFloodFillOracle) {
  Rng rng(13);
  for (int t = 0; t < 60; ++t) {
    const std::size_t w = 1 + rng.index(30), h = 1 + rng.index(30);
    BinaryMask m(w, h);
    const double density = rng.uniform(0.1, 0.7);
    for (auto& p : m.pixels) p = rng.uniform() < density;
    auto comps = connected_components(m);
    auto oracle = flood_labels(m);
    std::vector<int> owner(m.size(), -1);
    std::size_t total = 0;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const auto& comp = comps[c];
      ASSERT_GE(comp.area, 1u);
      ASSERT_EQ(comp.area, comp.pixels.size());
      if (c) {
        ASSERT_GE(comps[c - 1].area, comp.area);
        if (comps[c - 1].area == comp.area) ASSERT_LT(comps[c - 1].pixels.front(), comp.pixels.front());
      }
      total += comp.area;
      BoundingBox bb{w, h, 0, 0};
      for (auto p : comp.pixels) {
        ASSERT_TRUE(m.pixels[p]);
        ASSERT_EQ(owner[p], -1);
        owner[p] = static_cast<int>(c);
        ASSERT_EQ(oracle[p], oracle[comp.pixels.front()]);
        bb.x0 = std::min(bb.x0, p % w);
        bb.x1 = std::max(bb.x1, p % w);
        bb.y0 = std::min(bb.y0, p / w);
        bb.y1 = std::max(bb.y1, p / w);
      }
      ASSERT_EQ(comp.bbox, bb);
    }
    ASSERT_EQ(total, mask_area(m));
    int n_oracle = 0;
    for (int l : oracle) n_oracle = std::max(n_oracle, l + 1);
    ASSERT_EQ(static_cast<int>(comps.size()), n_oracle);
  }
}

TEST(Dice, Basics) {
  auto a = rect(10, 10, 0, 0, 4, 4);
  auto b = rect(10, 10, 0, 0, 4, 9);
  EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, b), 2.0 * 25 / 75);
  EXPECT_DOUBLE_EQ(dice(a, rect(10, 10, 6, 6, 9, 9)), 0.0);
}

TEST(ExtractObject, ExactPartitionRecoversReference) {
  auto ref = rect(32, 32, 8, 10, 20, 25);
  auto sel = extract_object(labeling_from(ref), ref, {});
  EXPECT_EQ(sel.mask, ref);
  EXPECT_DOUBLE_EQ(sel.dice, 1.0);
  EXPECT_EQ(sel.count, 1u);
  EXPECT_EQ(sel.cluster, 1);
}

TEST(ExtractObject, SingleClusterIsWholeImage) {
  auto ref = rect(32, 32, 8, 8, 17, 17);
  Labeling lab{32, 32, 1, std::vector<int>(1024, 0)};
  auto sel = extract_object(lab, ref, {});
  EXPECT_EQ(mask_area(sel.mask), 1024u);
  EXPECT_DOUBLE_EQ(sel.dice, 2.0 * 100 / (1024 + 100));
  EXPECT_EQ(sel.count, 1u);
}

TEST(ExtractObject, EverythingBelowMinAreaGivesEmpty) {
  BinaryMask speckle(20, 20, 0);
  for (std::size_t y = 0; y < 20; y += 3)
    for (std::size_t x = 0; x < 20; x += 3) speckle.at(x, y) = 1;
  Labeling lab = labeling_from(speckle);
  lab.k = 2;
  auto sel = extract_object(lab, speckle, {500, false});
  EXPECT_EQ(mask_area(sel.mask), 0u);
  EXPECT_EQ(sel.count, 0u);
  EXPECT_EQ(sel.cluster, -1);
}

TEST(ExtractObject, DiceIsMaximalAmongCandidates) {
  Rng rng(21);
  for (int t = 0; t < 40; ++t) {
    const std::size_t w = 24, h = 24;
    Labeling lab{w, h, 1 + static_cast<int>(rng.index(4)), {}};
    // blocky random labels so components are sizeable
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) lab.labels.push_back(static_cast<int>(((x / 6) * 7 + (y / 5) * 3 + t) % lab.k));
    for (int i = 0; i < 40; ++i) lab.labels[rng.index(w * h)] = static_cast<int>(rng.index(static_cast<std::size_t>(lab.k)));
    auto ref = rect(w, h, rng.index(8), rng.index(8), 10 + rng.index(12), 10 + rng.index(12));
    ExtractOptions opts{5, false};
    auto sel = extract_object(lab, ref, opts);
    double best = 0;
    for (int c = 0; c < lab.k; ++c) {
      BinaryMask m(w, h, 0);
      for (std::size_t i = 0; i < m.size(); ++i) m.pixels[i] = lab.labels[i] == c;
      for (auto& comp : connected_components(m))
        if (comp.area >= opts.min_area) best = std::max(best, dice(comp.mask(w, h), ref));
    }
    ASSERT_DOUBLE_EQ(sel.dice, best);
    ASSERT_DOUBLE_EQ(dice(sel.mask, ref), best);
  }
}

TEST(ExtractObject, CountsComponentsOfSelectedCluster) {
  // cluster 1: two blocks; cluster 2: one block elsewhere
  Labeling lab{30, 10, 3, std::vector<int>(300, 0)};
  auto paint = [&](std::size_t x0, std::size_t x1, int c) {
    for (std::size_t y = 2; y < 8; ++y)
      for (std::size_t x = x0; x <= x1; ++x) lab.labels[y * 30 + x] = c;
  };
  paint(1, 6, 1);
  paint(10, 15, 1);
  paint(20, 25, 2);
  auto ref = rect(30, 10, 1, 2, 6, 7);
  auto sel = extract_object(lab, ref, {10, false});
  EXPECT_EQ(sel.cluster, 1);
  EXPECT_EQ(sel.count, 2u);
  auto all = extract_object(lab, ref, {10, true});
  EXPECT_EQ(all.count, 4u);
}

TEST(ExtractObject, DimensionMismatchIsContractError) {
  Labeling lab{4, 4, 1, std::vector<int>(16, 0)};
  try {
    extract_object(lab, BinaryMask(5, 4, 1), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Contract);
  }
}

TEST(ExtractLargest, PrefersInteriorComponent) {
  Labeling lab{40, 40, 2, std::vector<int>(1600, 0)};
  for (std::size_t y = 10; y < 25; ++y)
    for (std::size_t x = 10; x < 25; ++x) lab.labels[y * 40 + x] = 1;
  auto sel = extract_largest(lab, {});
  EXPECT_EQ(sel.cluster, 1);
  EXPECT_EQ(mask_area(sel.mask), 225u);
}

TEST(ExtractLargest, FallsBackToBorderComponent) {
  Labeling lab{10, 10, 1, std::vector<int>(100, 0)};
  auto sel = extract_largest(lab, {});
  EXPECT_EQ(mask_area(sel.mask), 100u);
}

TEST(BoundingBox, Diagonal) {
  EXPECT_DOUBLE_EQ((BoundingBox{0, 0, 2, 3}).diagonal(), 5.0);
  EXPECT_DOUBLE_EQ(mask_bbox(rect(20, 20, 3, 4, 14, 15)).diagonal(), std::hypot(12, 12));
}
