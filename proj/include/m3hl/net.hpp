#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m3hl/layers.hpp"
#include "m3hl/ndarray.hpp"

namespace m3hl {

struct Parameter {
  std::string name;
  Tensor value;
};

/// Ordered collection of named arrays. Gradients and optimizer state reuse the
/// same layout as the parameters they belong to.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  const Tensor& get(const std::string& name) const;
  std::size_t element_count() const;

  /// Same names, zero values.
  ParameterSet zeros_like() const;
  /// Throws ShapeError unless `other` has identical names and shapes in the same order.
  void require_same_structure(const ParameterSet& other) const;

 private:
  std::vector<Parameter> params_;
};

struct NetConfig {
  std::size_t depth = 4;
  std::size_t base_channels = 16;
  std::size_t in_channels = 1;
  std::size_t num_classes = 4;
  double leaky_slope = 0.01;
};

/// Low-level (after the first downsampling stage) and high-level (bottleneck)
/// activations of one forward pass.
struct FeatureTaps {
  Tensor low;
  Tensor high;
};

struct ForwardResult {
  Tensor logits;
  FeatureTaps taps;
};

/// Upstream gradients for a forward pass. Empty tensors mean "no gradient".
struct OutputGrads {
  Tensor logits;
  Tensor low;
  Tensor high;
};

struct BlockCache {
  Tensor input;
  nn::NormCache norm1;
  Tensor pre1;
  Tensor act1;
  nn::NormCache norm2;
  Tensor pre2;
};

struct ForwardCache {
  std::vector<BlockCache> encoder;
  std::vector<BlockCache> decoder;  // indexed by output level 0..depth-1
  std::vector<Tensor> encoder_out;
  Tensor head_input;
};

/// U-Net style encoder-decoder.
///
/// Stage 0 is a conv block at full resolution with `base` channels. Stage
/// i = 1..depth average-pools by 2 and applies a conv block to base * 2^i
/// channels; stage 1 is the low-level tap and stage `depth` the bottleneck
/// (high-level tap). The decoder upsamples, concatenates the matching skip and
/// applies a conv block; a 1x1 head maps to class scores. A conv block is
/// (3x3 conv, instance norm, leaky ReLU) twice.
class SegNetwork {
 public:
  SegNetwork(NetConfig config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  Shape low_tap_shape(std::size_t n, std::size_t h, std::size_t w) const;
  Shape high_tap_shape(std::size_t n, std::size_t h, std::size_t w) const;

  ForwardResult forward(const Tensor& x) const;
  ForwardResult forward(const Tensor& x, ForwardCache& cache) const;

  /// Parameter gradients for the cached forward pass.
  ParameterSet backward(const ForwardCache& cache, const OutputGrads& grads) const;
  /// Same, accumulating into an existing gradient set.
  void backward(const ForwardCache& cache, const OutputGrads& grads, ParameterSet& out) const;

  LabelMap predict_labels(const Tensor& x) const;

 private:
  struct BlockParams {
    std::size_t conv1, gamma1, beta1, conv2, gamma2, beta2;
  };

  BlockParams add_block(const std::string& prefix, std::size_t cin, std::size_t cout);
  Tensor block_forward(const BlockParams& b, const Tensor& x, BlockCache& cache) const;
  Tensor block_backward(const BlockParams& b, const BlockCache& cache, const Tensor& dy,
                        ParameterSet& grads) const;
  void check_input(const Tensor& x) const;

  NetConfig config_;
  ParameterSet params_;
  std::vector<BlockParams> encoder_;
  std::vector<BlockParams> decoder_;
  std::size_t head_weight_ = 0;
  std::size_t head_bias_ = 0;
};

/// Per-voxel argmax over the class axis of (N, C, H, W) scores; ties go to the
/// lowest class index.
LabelMap argmax_classes(const Tensor& logits);

}  // namespace m3hl
