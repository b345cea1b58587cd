#include "m3hl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace m3hl {

OverlapScores dice_jaccard(const LabelMap& pred, const LabelMap& gt) {
  require_same_shape(pred.shape(), gt.shape(), "dice_jaccard");
  std::size_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0, b = gt[i] != 0;
    p += a;
    g += b;
    both += a && b;
  }
  if (p + g == 0) return {1.0, 1.0};
  return {2.0 * static_cast<double>(both) / static_cast<double>(p + g),
          static_cast<double>(both) / static_cast<double>(p + g - both)};
}

std::vector<std::vector<std::size_t>> boundary_points(const LabelMap& mask) {
  const Shape& shape = mask.shape();
  const std::size_t rank = shape.size();
  std::vector<std::size_t> strides(rank, 1);
  for (std::size_t a = rank; a-- > 1;) strides[a - 1] = strides[a] * shape[a];

  std::vector<std::vector<std::size_t>> points;
  std::vector<std::size_t> coord(rank);
  for (std::size_t flat = 0; flat < mask.size(); ++flat) {
    if (!mask[flat]) continue;
    std::size_t rem = flat;
    for (std::size_t a = 0; a < rank; ++a) {
      coord[a] = rem / strides[a];
      rem %= strides[a];
    }
    bool edge = false;
    for (std::size_t a = 0; a < rank && !edge; ++a) {
      if (coord[a] == 0 || coord[a] + 1 == shape[a]) {
        edge = true;
      } else {
        edge = !mask[flat - strides[a]] || !mask[flat + strides[a]];
      }
    }
    if (edge) points.push_back(coord);
  }
  return points;
}

namespace {

double nearest(const std::vector<std::size_t>& p, const std::vector<std::vector<std::size_t>>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      const double d = static_cast<double>(p[a]) - static_cast<double>(q[a]);
      d2 += d * d;
    }
    best = std::min(best, d2);
  }
  return std::sqrt(best);
}

}  // namespace

std::vector<double> surface_distance_pool(const LabelMap& pred, const LabelMap& gt) {
  require_same_shape(pred.shape(), gt.shape(), "surface_distances");
  const auto bp = boundary_points(pred);
  const auto bg = boundary_points(gt);
  if (bp.empty() || bg.empty()) throw UndefinedSurfaceError("surface distance undefined for an empty mask");
  std::vector<double> pool;
  pool.reserve(bp.size() + bg.size());
  for (const auto& p : bp) pool.push_back(nearest(p, bg));
  for (const auto& g : bg) pool.push_back(nearest(g, bp));
  return pool;
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw RangeError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

SurfaceScores surface_distances(const LabelMap& pred, const LabelMap& gt) {
  const std::vector<double> pool = surface_distance_pool(pred, gt);
  double sum = 0.0;
  for (double d : pool) sum += d;
  return {percentile_linear(pool, 0.95), sum / static_cast<double>(pool.size())};
}

MetricsReport evaluate_segmentation(const LabelMap& pred, const LabelMap& gt, std::size_t num_classes) {
  require_same_shape(pred.shape(), gt.shape(), "evaluate_segmentation");
  if (pred.rank() < 2 || num_classes < 2) throw ShapeError("evaluate_segmentation expects (N, ...) maps and >= 2 classes");
  const std::size_t cases = pred.dim(0);
  const std::size_t per = cases ? pred.size() / cases : 0;
  const Shape case_shape(pred.shape().begin() + 1, pred.shape().end());

  // [case][class] results, filled in parallel and reduced in fixed order.
  struct Cell {
    OverlapScores overlap;
    SurfaceScores surface;
    bool defined = true;
  };
  std::vector<Cell> cells(cases * num_classes);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t n = 0; n < cases; ++n) {
    for (std::size_t c = 1; c < num_classes; ++c) {
      LabelMap p(case_shape), g(case_shape);
      for (std::size_t i = 0; i < per; ++i) {
        p[i] = pred[n * per + i] == c;
        g[i] = gt[n * per + i] == c;
      }
      Cell& cell = cells[n * num_classes + c];
      cell.overlap = dice_jaccard(p, g);
      const bool pe = std::none_of(p.values().begin(), p.values().end(), [](auto v) { return v; });
      const bool ge = std::none_of(g.values().begin(), g.values().end(), [](auto v) { return v; });
      if (pe && ge) {
        cell.surface = {0.0, 0.0};
      } else if (pe || ge) {
        cell.defined = false;
      } else {
        cell.surface = surface_distances(p, g);
      }
    }
  }

  MetricsReport report;
  report.n_cases = cases;
  report.per_class.assign(num_classes, {});
  for (std::size_t c = 1; c < num_classes; ++c) {
    ClassMetrics& m = report.per_class[c];
    std::size_t defined = 0;
    for (std::size_t n = 0; n < cases; ++n) {
      const Cell& cell = cells[n * num_classes + c];
      m.dice += cell.overlap.dice;
      m.jaccard += cell.overlap.jaccard;
      if (cell.defined) {
        m.hd95 += cell.surface.hd95;
        m.asd += cell.surface.asd;
        ++defined;
      } else {
        ++m.undefined_surface;
      }
    }
    if (cases) {
      m.dice /= static_cast<double>(cases);
      m.jaccard /= static_cast<double>(cases);
    }
    if (defined) {
      m.hd95 /= static_cast<double>(defined);
      m.asd /= static_cast<double>(defined);
    }
  }
  const double fg = static_cast<double>(num_classes - 1);
  for (std::size_t c = 1; c < num_classes; ++c) {
    const ClassMetrics& m = report.per_class[c];
    report.mean.dice += m.dice / fg;
    report.mean.jaccard += m.jaccard / fg;
    report.mean.hd95 += m.hd95 / fg;
    report.mean.asd += m.asd / fg;
    report.mean.undefined_surface += m.undefined_surface;
  }
  return report;
}

}  // namespace m3hl
