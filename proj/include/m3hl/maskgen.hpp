#pragma once

#include <cstdint>
#include <vector>

#include "m3hl/ndarray.hpp"

namespace m3hl {

/// Binary patch-grid mask M. A value of 1 keeps unlabeled content, 0 takes
/// labeled content; `ratio` is the fraction of patches set to 0.
struct Mask {
  LabelMap values;
  Shape patch_size;
  double ratio = 0.0;
  std::uint64_t seed = 0;

  const Shape& shape() const { return values.shape(); }
  std::size_t zero_patch_count() const;
  std::size_t patch_count() const;
};

/// Random mask over `shape` (2D or 3D) with patches of `patch_size`.
///
/// Procedure: seed SplitMix64 with `seed`, build the identity permutation of
/// the P row-major patch indices, Fisher-Yates shuffle it (for i = P-1 down to
/// 1, swap i with bounded(i + 1)), and zero the first llround(ratio * P)
/// patches of the permutation.
Mask generate_mask(const Shape& shape, const Shape& patch_size, double ratio, std::uint64_t seed);

/// Elementwise complement 1 - M. The ratio of the result is 1 - (zero patches / P).
Mask invert_mask(const Mask& mask);

/// Per-voxel weight map M + alpha (1 - M), or alpha M + (1 - M) when `swap` is set.
Tensor mask_weight_map(const Mask& mask, double alpha, bool swap = false);

}  // namespace m3hl
