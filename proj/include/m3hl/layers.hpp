#pragma once

#include <utility>
#include <vector>

#include "m3hl/ndarray.hpp"

// Differentiable building blocks on NCHW tensors. Each forward has a matching
// backward that takes the upstream gradient and returns the input gradient.
namespace m3hl::nn {

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias);
/// Writes dx (if non-null) and accumulates into dweight / dbias.
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor* dx,
                     Tensor& dweight, Tensor* dbias);

struct NormCache {
  Tensor xhat;
  std::vector<double> inv_std;  // one per (n, c) plane
};

/// Per-sample, per-channel normalization with affine (gamma, beta) of length C.
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, NormCache& cache,
                     double eps = 1e-5);
Tensor instance_norm_backward(const Tensor& dy, const NormCache& cache, const Tensor& gamma,
                              Tensor& dgamma, Tensor& dbeta);

Tensor leaky_relu(const Tensor& x, double slope);
Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope);

/// 2x2 mean pooling, stride 2.
Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& dy);

/// Nearest-neighbour 2x upsampling.
Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& dy);

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& x, std::size_t first);

}  // namespace m3hl::nn
