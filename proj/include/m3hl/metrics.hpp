#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "m3hl/ndarray.hpp"

namespace m3hl {

struct OverlapScores {
  double dice = 0.0;
  double jaccard = 0.0;
};

struct SurfaceScores {
  double hd95 = 0.0;
  double asd = 0.0;
};

/// Dice 2|P & G| / (|P| + |G|) and Jaccard |P & G| / |P | G| over nonzero
/// voxels; both are 1 when both masks are empty.
OverlapScores dice_jaccard(const LabelMap& pred, const LabelMap& gt);

/// Boundary voxels: foreground voxels with at least one face neighbour that is
/// background or outside the array. Works for any rank.
std::vector<std::vector<std::size_t>> boundary_points(const LabelMap& mask);

/// Symmetric boundary-distance pool: for every boundary voxel of each mask the
/// Euclidean distance to the nearest boundary voxel of the other, by brute
/// force over all pairs.
std::vector<double> surface_distance_pool(const LabelMap& pred, const LabelMap& gt);

/// 95th percentile (linear interpolation between order statistics) and mean
/// of the pool. Throws UndefinedSurfaceError if either mask is empty.
SurfaceScores surface_distances(const LabelMap& pred, const LabelMap& gt);

/// q-quantile, q in [0, 1], with linear interpolation at rank q * (n - 1).
double percentile_linear(std::vector<double> values, double q);

struct ClassMetrics {
  double dice = 0.0;
  double jaccard = 0.0;
  double hd95 = 0.0;
  double asd = 0.0;
  std::size_t undefined_surface = 0;  // cases excluded from hd95 / asd
};

/// Per-class metrics averaged over cases, and their mean over foreground classes.
struct MetricsReport {
  std::vector<ClassMetrics> per_class;  // index = class id; entry 0 is background
  ClassMetrics mean;
  std::size_t n_cases = 0;
};

/// One-vs-rest evaluation of predicted against reference class maps of shape
/// (N, ...) for classes 1..num_classes-1. When both masks of a class are empty
/// the case scores dice = jaccard = 1 and zero distances; when exactly one is
/// empty the distances are undefined and that case is left out of the
/// hd95 / asd averages.
MetricsReport evaluate_segmentation(const LabelMap& pred, const LabelMap& gt, std::size_t num_classes);

}  // namespace m3hl
