#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qtune/imaging.hpp"

namespace qtune {

/// Row-major point cloud: size() points of dimension dim.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  const double* point(std::size_t i) const { return data.data() + i * dim; }
};

/// Per-channel z-score of a feature map, one 4-vector per pixel.
/// Zero-variance channels become all zeros.
PointSet normalize_features(const FeatureMap& fm);

struct KMeansConfig {
  int k = 2;
  int max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct KMeansResult {
  PointSet centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  /// Inertia after the initial assignment and after every Lloyd iteration.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// Lloyd's algorithm from farthest-point initialization.
///
/// The first centroid is the lexicographically smallest point; each further
/// centroid is the point farthest from its nearest chosen centroid (lowest
/// index on ties). Stops when the inertia improvement drops below `tol`, the
/// assignment stops changing, or after `max_iters` iterations. An empty
/// cluster is reseeded with the point farthest from its current centroid.
/// The returned assignment is nearest-centroid with respect to the returned
/// centroids. Throws Error{Config} when there are fewer points than k.
KMeansResult kmeans(const PointSet& points, const KMeansConfig& cfg);

struct Labeling {
  std::size_t width = 0;
  std::size_t height = 0;
  int k = 0;
  std::vector<int> labels;
};

struct BoundingBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive

  /// Diagonal of the pixel extent: hypot(x1 - x0 + 1, y1 - y0 + 1).
  double diagonal() const;
  bool operator==(const BoundingBox&) const = default;
};

struct Component {
  std::vector<std::size_t> pixels;  // row-major indices, ascending
  std::size_t area = 0;
  BoundingBox bbox;
  double cx = 0.0;
  double cy = 0.0;

  BinaryMask mask(std::size_t width, std::size_t height) const;
};

/// Maximal 8-connected regions of set pixels, sorted by area descending and
/// then by the scan position of their first pixel.
std::vector<Component> connected_components(const BinaryMask& mask);

std::size_t mask_area(const BinaryMask& mask);
BoundingBox mask_bbox(const BinaryMask& mask);  // requires a non-empty mask
double dice(const BinaryMask& a, const BinaryMask& b);

struct ObjectSelection {
  BinaryMask mask;          // empty (all zero) when nothing qualifies
  std::size_t count = 0;    // x1, qualifying components counted
  int cluster = -1;
  double dice = 0.0;
};

struct ExtractOptions {
  std::size_t min_area = 50;
  /// Count qualifying components of every cluster instead of only the
  /// selected object's cluster.
  bool count_all_clusters = false;
};

/// Chooses among components of area >= min_area in every cluster the one
/// with maximal Dice against `reference` (ties: larger area, then scan order).
/// Throws Error{Contract} on dimension mismatch.
ObjectSelection extract_object(const Labeling& lab, const BinaryMask& reference, const ExtractOptions& opts);

/// Reference-free selection: the largest qualifying component that does not
/// touch the image border, or the largest overall when all of them do.
ObjectSelection extract_largest(const Labeling& lab, const ExtractOptions& opts);

/// Labels scaled to evenly spaced gray levels for inspection.
GrayImage labeling_to_image(const Labeling& lab);

}  // namespace qtune
