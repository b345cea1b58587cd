#pragma once

#include <cstddef>
#include <span>

namespace m3hl::kernels {

/// Geometry of a stride-1, same-padded 2D convolution over NCHW arrays.
/// Weights are laid out (cout, cin, k, k); k is odd.
struct ConvDims {
  std::size_t n = 1;
  std::size_t cin = 1;
  std::size_t cout = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t k = 3;

  std::size_t input_size() const { return n * cin * h * w; }
  std::size_t output_size() const { return n * cout * h * w; }
  std::size_t weight_size() const { return cout * cin * k * k; }
};

// OpenMP kernels used by the network. Each output element is owned by exactly
// one thread and accumulated in a fixed order, so results do not depend on the
// thread count.

/// out = conv(in, weight) + bias. `bias` may be empty.
void conv2d_forward(std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out, const ConvDims& d);

/// grad_in = conv^T(grad_out, weight). Overwrites grad_in.
void conv2d_backward_input(std::span<const double> grad_out, std::span<const double> weight,
                           std::span<double> grad_in, const ConvDims& d);

/// Accumulates into grad_weight and (when non-empty) grad_bias.
void conv2d_backward_weight(std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_weight, std::span<double> grad_bias,
                            const ConvDims& d);

/// Straightforward single-threaded versions kept as the test reference.
namespace serial {

void conv2d_forward(std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out, const ConvDims& d);
void conv2d_backward_input(std::span<const double> grad_out, std::span<const double> weight,
                           std::span<double> grad_in, const ConvDims& d);
void conv2d_backward_weight(std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_weight, std::span<double> grad_bias,
                            const ConvDims& d);

}  // namespace serial

/// Number of OpenMP threads the kernels will use (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace m3hl::kernels
