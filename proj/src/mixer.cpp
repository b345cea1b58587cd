#include "m3hl/mixer.hpp"

#include <algorithm>
#include <string>

namespace m3hl {
namespace {

// Number of leading elements the mask is repeated over.
std::size_t broadcast_count(const Shape& data, const Shape& mask) {
  if (mask.size() > data.size() || !std::equal(mask.rbegin(), mask.rend(), data.rbegin())) {
    throw ShapeError("mask shape " + shape_str(mask) + " does not match array shape " + shape_str(data));
  }
  return shape_size(data) / std::max<std::size_t>(shape_size(mask), 1);
}

}  // namespace

Tensor mix_images(const Tensor& x_u, const Tensor& x_l, const Mask& mask) {
  require_same_shape(x_u.shape(), x_l.shape(), "mix_images");
  const std::size_t reps = broadcast_count(x_u.shape(), mask.shape());
  const std::size_t m = mask.values.size();
  Tensor out(x_u.shape());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = r * m + i;
      out[k] = mask.values[i] ? x_u[k] : x_l[k];
    }
  }
  return out;
}

LabelMap mix_targets(const LabelMap& pseudo_u, const LabelMap& y_l, const Mask& mask,
                     std::size_t num_classes) {
  require_same_shape(pseudo_u.shape(), y_l.shape(), "mix_targets");
  for (const LabelMap* map : {&pseudo_u, &y_l}) {
    for (auto v : map->values()) {
      if (v >= num_classes) {
        throw RangeError("class index " + std::to_string(v) + " outside [0, " +
                         std::to_string(num_classes) + ")");
      }
    }
  }
  const std::size_t reps = broadcast_count(pseudo_u.shape(), mask.shape());
  const std::size_t m = mask.values.size();
  LabelMap out(pseudo_u.shape());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = r * m + i;
      out[k] = mask.values[i] ? pseudo_u[k] : y_l[k];
    }
  }
  return out;
}

MixedPair mix_pair(const Tensor& x_u, const Tensor& x_l, const LabelMap& pseudo_u,
                   const LabelMap& y_l, const Mask& mask, std::size_t num_classes) {
  return {mix_images(x_u, x_l, mask), mix_targets(pseudo_u, y_l, mask, num_classes), mask};
}

BatchHalves split_batch(const Tensor& images, const std::optional<LabelMap>& labels) {
  BatchHalves out{split_halves(images), std::nullopt};
  if (labels) {
    if (labels->rank() == 0 || labels->dim(0) != images.dim(0)) {
      throw ShapeError("label stack " + shape_str(labels->shape()) + " does not pair with images " +
                       shape_str(images.shape()));
    }
    out.labels = split_halves(*labels);
  }
  return out;
}

}  // namespace m3hl
