#include "m3hl/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "m3hl/rng.hpp"

namespace m3hl {
namespace {

Shape patch_grid(const Shape& shape, const Shape& patch) {
  if (shape.empty() || shape.size() != patch.size()) {
    throw ShapeError("mask shape " + shape_str(shape) + " and patch size " + shape_str(patch) +
                     " must have the same positive rank");
  }
  Shape grid(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (shape[a] == 0) throw ShapeError("mask shape " + shape_str(shape) + " has an empty axis");
    if (patch[a] == 0 || shape[a] % patch[a] != 0) {
      throw DivisibilityError("axis " + std::to_string(a) + " extent " + std::to_string(shape[a]) +
                              " is not a multiple of patch extent " + std::to_string(patch[a]));
    }
    grid[a] = shape[a] / patch[a];
  }
  return grid;
}

// Row-major patch index of a voxel given its row-major flat index.
std::size_t patch_of(std::size_t flat, const Shape& shape, const Shape& patch, const Shape& grid) {
  std::size_t p = 0;
  std::size_t rem = flat;
  std::size_t stride = shape_size(shape);
  for (std::size_t a = 0; a < shape.size(); ++a) {
    stride /= shape[a];
    const std::size_t coord = rem / stride;
    rem %= stride;
    p = p * grid[a] + coord / patch[a];
  }
  return p;
}

}  // namespace

std::size_t Mask::patch_count() const {
  std::size_t n = 1;
  for (std::size_t a = 0; a < patch_size.size(); ++a) n *= values.dim(a) / patch_size[a];
  return n;
}

std::size_t Mask::zero_patch_count() const {
  const Shape grid = patch_grid(values.shape(), patch_size);
  std::vector<bool> zero(shape_size(grid), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0) zero[patch_of(i, values.shape(), patch_size, grid)] = true;
  }
  return static_cast<std::size_t>(std::count(zero.begin(), zero.end(), true));
}

Mask generate_mask(const Shape& shape, const Shape& patch_size, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw RangeError("mask ratio " + std::to_string(ratio) + " outside [0, 1]");
  }
  const Shape grid = patch_grid(shape, patch_size);
  const std::size_t patches = shape_size(grid);

  std::vector<std::size_t> perm(patches);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = patches - 1; i >= 1; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const auto n_zero = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(patches)));
  std::vector<std::uint8_t> keep(patches, 1);
  for (std::size_t k = 0; k < n_zero; ++k) keep[perm[k]] = 0;

  Mask mask{LabelMap(shape, 1), patch_size, ratio, seed};
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    mask.values[i] = keep[patch_of(i, shape, patch_size, grid)];
  }
  return mask;
}

Mask invert_mask(const Mask& mask) {
  Mask out = mask;
  for (auto& v : out.values.values()) v = static_cast<std::uint8_t>(1 - v);
  const std::size_t p = mask.patch_count();
  out.ratio = p ? 1.0 - static_cast<double>(mask.zero_patch_count()) / static_cast<double>(p) : 0.0;
  return out;
}

Tensor mask_weight_map(const Mask& mask, double alpha, bool swap) {
  Tensor w(mask.shape());
  const double on_one = swap ? alpha : 1.0;
  const double on_zero = swap ? 1.0 : alpha;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask.values[i] ? on_one : on_zero;
  return w;
}

}  // namespace m3hl
