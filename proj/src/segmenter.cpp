#include "qtune/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qtune/error.hpp"

namespace qtune {

PointSet normalize_features(const FeatureMap& fm) {
  const std::size_t n = fm.size();
  if (n == 0) fail(ErrorKind::Contract, "normalize_features: empty feature map");
  constexpr std::size_t D = FeatureMap::kChannels;
  PointSet out{D, std::vector<double>(n * D, 0.0)};
  for (std::size_t c = 0; c < D; ++c) {
    const auto& ch = fm.channels[c];
    double mean = 0.0;
    for (double v : ch) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : ch) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) continue;
    for (std::size_t i = 0; i < n; ++i) out.data[i * D + c] = (ch[i] - mean) / sd;
  }
  return out;
}

void KMeansConfig::validate() const {
  if (k < 1) fail(ErrorKind::Config, "kmeans: k must be >= 1");
  if (max_iters < 1) fail(ErrorKind::Config, "kmeans: max_iters must be >= 1");
  if (!(tol >= 0.0)) fail(ErrorKind::Config, "kmeans: tol must be >= 0");
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Nearest centroid per point (lowest index on ties); returns inertia.
double assign(const PointSet& pts, const PointSet& cents, std::vector<int>& labels, std::vector<double>& dist) {
  const std::size_t n = pts.size();
  const std::size_t k = cents.size();
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(pts.point(i), cents.point(c), pts.dim);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

PointSet farthest_point_init(const PointSet& pts, std::size_t k) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.dim;
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::lexicographical_compare(pts.point(i), pts.point(i) + dim, pts.point(first), pts.point(first) + dim))
      first = i;
  }
  PointSet cents{dim, {}};
  cents.data.insert(cents.data.end(), pts.point(first), pts.point(first) + dim);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = sq_dist(pts.point(i), pts.point(first), dim);
  while (cents.size() < k) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (nearest[i] > nearest[arg]) arg = i;
    cents.data.insert(cents.data.end(), pts.point(arg), pts.point(arg) + dim);
    const double* c = cents.point(cents.size() - 1);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], sq_dist(pts.point(i), c, dim));
  }
  return cents;
}

// Centroid update; empty clusters take the point farthest from its centroid.
void update_centroids(const PointSet& pts, PointSet& cents, std::vector<int>& labels, std::vector<double>& dist) {
  const std::size_t k = cents.size();
  const std::size_t dim = pts.dim;
  std::vector<std::size_t> counts(k, 0);
  std::fill(cents.data.begin(), cents.data.end(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    for (std::size_t d = 0; d < dim; ++d) cents.data[c * dim + d] += pts.point(i)[d];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) cents.data[c * dim + d] /= static_cast<double>(counts[c]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    // Farthest point whose cluster can spare it.
    std::size_t arg = pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (arg == pts.size() || dist[i] > dist[arg]) arg = i;
    }
    if (arg == pts.size()) continue;
    std::copy(pts.point(arg), pts.point(arg) + dim, cents.data.begin() + static_cast<std::ptrdiff_t>(c * dim));
    --counts[static_cast<std::size_t>(labels[arg])];
    labels[arg] = static_cast<int>(c);
    counts[c] = 1;
    dist[arg] = 0.0;
  }
}

}  // namespace

KMeansResult kmeans(const PointSet& points, const KMeansConfig& cfg) {
  cfg.validate();
  const std::size_t n = points.size();
  const auto k = static_cast<std::size_t>(cfg.k);
  if (n < k)
    fail(ErrorKind::Config, "kmeans: " + std::to_string(n) + " points cannot form " + std::to_string(k) + " clusters");

  KMeansResult r;
  r.centroids = farthest_point_init(points, k);
  r.assignments.assign(n, 0);
  std::vector<double> dist(n);
  r.inertia = assign(points, r.centroids, r.assignments, dist);
  r.inertia_history.push_back(r.inertia);

  PointSet next = r.centroids;
  std::vector<int> next_labels(n);
  for (int it = 0; it < cfg.max_iters; ++it) {
    next_labels = r.assignments;
    update_centroids(points, next, next_labels, dist);
    const std::vector<int> before = r.assignments;
    const double inertia = assign(points, next, next_labels, dist);
    const double improvement = r.inertia - inertia;
    // Floating noise can make a converged step look like a tiny increase.
    if (inertia > r.inertia) break;
    r.centroids = next;
    r.assignments = next_labels;
    r.inertia = inertia;
    r.inertia_history.push_back(inertia);
    r.iterations = it + 1;
    if (improvement < cfg.tol || r.assignments == before) break;
  }
  return r;
}

double BoundingBox::diagonal() const {
  return std::hypot(static_cast<double>(x1 - x0 + 1), static_cast<double>(y1 - y0 + 1));
}

BinaryMask Component::mask(std::size_t width, std::size_t height) const {
  BinaryMask m(width, height, 0);
  for (auto p : pixels) m.pixels[p] = 255;
  return m;
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  const std::size_t W = mask.width, H = mask.height;
  if (W == 0 || H == 0) fail(ErrorKind::Contract, "connected_components: empty mask");
  std::vector<bool> seen(mask.size(), false);
  std::vector<Component> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.pixels[start] || seen[start]) continue;
    Component comp;
    comp.bbox = {start % W, start / W, start % W, start / W};
    stack.assign(1, start);
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const std::size_t x = p % W, y = p / W;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy) continue;
          const auto nx = static_cast<std::ptrdiff_t>(x) + dx;
          const auto ny = static_cast<std::ptrdiff_t>(y) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(W) || ny >= static_cast<std::ptrdiff_t>(H)) continue;
          const auto q = static_cast<std::size_t>(ny) * W + static_cast<std::size_t>(nx);
          if (mask.pixels[q] && !seen[q]) {
            seen[q] = true;
            stack.push_back(q);
          }
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    comp.area = comp.pixels.size();
    double sx = 0.0, sy = 0.0;
    for (auto p : comp.pixels) {
      const std::size_t x = p % W, y = p / W;
      comp.bbox.x0 = std::min(comp.bbox.x0, x);
      comp.bbox.x1 = std::max(comp.bbox.x1, x);
      comp.bbox.y0 = std::min(comp.bbox.y0, y);
      comp.bbox.y1 = std::max(comp.bbox.y1, y);
      sx += static_cast<double>(x);
      sy += static_cast<double>(y);
    }
    comp.cx = sx / static_cast<double>(comp.area);
    comp.cy = sy / static_cast<double>(comp.area);
    out.push_back(std::move(comp));
  }
  // Discovery order is scan order of each component's first pixel.
  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) { return a.area > b.area; });
  return out;
}

std::size_t mask_area(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.pixels.begin(), mask.pixels.end(), [](auto v) { return v != 0; }));
}

BoundingBox mask_bbox(const BinaryMask& mask) {
  BoundingBox b{mask.width, mask.height, 0, 0};
  bool any = false;
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      any = true;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  if (!any) fail(ErrorKind::Contract, "mask_bbox: empty mask");
  return b;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) fail(ErrorKind::Contract, "dice: dimension mismatch");
  std::size_t inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.pixels[i] != 0, y = b.pixels[i] != 0;
    sa += x;
    sb += y;
    inter += x && y;
  }
  return sa + sb == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb);
}

namespace {

BinaryMask cluster_mask(const Labeling& lab, int cluster) {
  BinaryMask m(lab.width, lab.height, 0);
  for (std::size_t i = 0; i < lab.labels.size(); ++i)
    if (lab.labels[i] == cluster) m.pixels[i] = 255;
  return m;
}

struct Candidate {
  int cluster;
  std::size_t first_pixel;
  const Component* comp;
};

std::vector<std::vector<Component>> qualifying_components(const Labeling& lab, std::size_t min_area) {
  if (lab.labels.size() != lab.width * lab.height) fail(ErrorKind::Contract, "labeling size mismatch");
  std::vector<std::vector<Component>> per_cluster(static_cast<std::size_t>(std::max(lab.k, 0)));
  for (int c = 0; c < lab.k; ++c) {
    auto comps = connected_components(cluster_mask(lab, c));
    std::erase_if(comps, [&](const Component& comp) { return comp.area < min_area; });
    per_cluster[static_cast<std::size_t>(c)] = std::move(comps);
  }
  return per_cluster;
}

std::size_t count_for(const std::vector<std::vector<Component>>& per_cluster, int cluster, bool all) {
  if (!all) return per_cluster[static_cast<std::size_t>(cluster)].size();
  std::size_t n = 0;
  for (const auto& v : per_cluster) n += v.size();
  return n;
}

}  // namespace

ObjectSelection extract_object(const Labeling& lab, const BinaryMask& reference, const ExtractOptions& opts) {
  if (lab.width != reference.width || lab.height != reference.height)
    fail(ErrorKind::Contract, "extract_object: labeling and reference dimensions differ");
  const auto per_cluster = qualifying_components(lab, opts.min_area);

  std::vector<std::uint8_t> ref(reference.size());
  std::size_t ref_area = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ref[i] = reference.pixels[i] != 0;
    ref_area += ref[i];
  }

  ObjectSelection sel{BinaryMask(lab.width, lab.height, 0), 0, -1, 0.0};
  const Component* best = nullptr;
  std::size_t best_first = 0;
  for (int c = 0; c < lab.k; ++c) {
    for (const auto& comp : per_cluster[static_cast<std::size_t>(c)]) {
      std::size_t inter = 0;
      for (auto p : comp.pixels) inter += ref[p];
      const double d = 2.0 * static_cast<double>(inter) / static_cast<double>(comp.area + ref_area);
      const std::size_t first = comp.pixels.front();
      const bool better = best == nullptr || d > sel.dice ||
                          (d == sel.dice && (comp.area > best->area || (comp.area == best->area && first < best_first)));
      if (better) {
        best = &comp;
        best_first = first;
        sel.dice = d;
        sel.cluster = c;
      }
    }
  }
  if (!best) return sel;
  sel.mask = best->mask(lab.width, lab.height);
  sel.count = count_for(per_cluster, sel.cluster, opts.count_all_clusters);
  return sel;
}

ObjectSelection extract_largest(const Labeling& lab, const ExtractOptions& opts) {
  const auto per_cluster = qualifying_components(lab, opts.min_area);
  const auto touches_border = [&](const Component& c) {
    return c.bbox.x0 == 0 || c.bbox.y0 == 0 || c.bbox.x1 + 1 == lab.width || c.bbox.y1 + 1 == lab.height;
  };
  ObjectSelection sel{BinaryMask(lab.width, lab.height, 0), 0, -1, 0.0};
  for (bool allow_border : {false, true}) {
    const Component* best = nullptr;
    for (int c = 0; c < lab.k; ++c) {
      for (const auto& comp : per_cluster[static_cast<std::size_t>(c)]) {
        if (!allow_border && touches_border(comp)) continue;
        if (!best || comp.area > best->area || (comp.area == best->area && comp.pixels.front() < best->pixels.front())) {
          best = &comp;
          sel.cluster = c;
        }
      }
    }
    if (best) {
      sel.mask = best->mask(lab.width, lab.height);
      sel.count = count_for(per_cluster, sel.cluster, opts.count_all_clusters);
      return sel;
    }
  }
  return sel;
}

GrayImage labeling_to_image(const Labeling& lab) {
  GrayImage img(lab.width, lab.height);
  for (std::size_t i = 0; i < lab.labels.size(); ++i)
    img.pixels[i] = lab.k <= 1 ? 0 : static_cast<std::uint8_t>(lab.labels[i] * 255 / (lab.k - 1));
  return img;
}

}  // namespace qtune
