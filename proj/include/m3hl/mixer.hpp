#pragma once

#include <optional>

#include "m3hl/maskgen.hpp"
#include "m3hl/ndarray.hpp"

namespace m3hl {

struct MixedPair {
  Tensor image;
  LabelMap target;
  Mask mask;
};

/// x_u * M + x_l * (1 - M). The mask is broadcast over leading axes, so it may
/// match the full array or only its trailing spatial axes.
Tensor mix_images(const Tensor& x_u, const Tensor& x_l, const Mask& mask);

/// Integer class-map counterpart of mix_images; pseudo labels where M = 1,
/// ground truth where M = 0. Class indices must lie in [0, num_classes).
LabelMap mix_targets(const LabelMap& pseudo_u, const LabelMap& y_l, const Mask& mask,
                     std::size_t num_classes);

MixedPair mix_pair(const Tensor& x_u, const Tensor& x_l, const LabelMap& pseudo_u,
                   const LabelMap& y_l, const Mask& mask, std::size_t num_classes);

template <class T>
struct Halves {
  NdArray<T> a;
  NdArray<T> b;
};

/// First half of the leading axis goes to a, second half to b.
template <class T>
Halves<T> split_halves(const NdArray<T>& stack) {
  if (stack.rank() == 0 || stack.dim(0) % 2 != 0) {
    throw ShapeError("batch of shape " + shape_str(stack.shape()) + " cannot be split into equal halves");
  }
  const std::size_t h = stack.dim(0) / 2;
  return {stack.slice(0, h), stack.slice(h, 2 * h)};
}

struct BatchHalves {
  Halves<double> images;
  std::optional<Halves<std::uint8_t>> labels;
};

BatchHalves split_batch(const Tensor& images, const std::optional<LabelMap>& labels = std::nullopt);

}  // namespace m3hl
