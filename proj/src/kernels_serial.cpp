#include "m3hl/kernels.hpp"

#include <cstdint>

namespace m3hl::kernels::serial {
namespace {

using Index = std::int64_t;

}  // namespace

void conv2d_forward(std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out, const ConvDims& d) {
  const Index r = static_cast<Index>(d.k / 2);
  const Index H = static_cast<Index>(d.h), W = static_cast<Index>(d.w), K = static_cast<Index>(d.k);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t co = 0; co < d.cout; ++co)
      for (Index y = 0; y < H; ++y)
        for (Index x = 0; x < W; ++x) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (std::size_t ci = 0; ci < d.cin; ++ci)
            for (Index ky = 0; ky < K; ++ky)
              for (Index kx = 0; kx < K; ++kx) {
                const Index iy = y + ky - r, ix = x + kx - r;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += weight[((co * d.cin + ci) * d.k + ky) * d.k + kx] *
                       in[((n * d.cin + ci) * d.h + iy) * d.w + ix];
              }
          out[((n * d.cout + co) * d.h + y) * d.w + x] = acc;
        }
}

void conv2d_backward_input(std::span<const double> grad_out, std::span<const double> weight,
                           std::span<double> grad_in, const ConvDims& d) {
  const Index r = static_cast<Index>(d.k / 2);
  const Index H = static_cast<Index>(d.h), W = static_cast<Index>(d.w), K = static_cast<Index>(d.k);
  for (auto& g : grad_in) g = 0.0;
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t co = 0; co < d.cout; ++co)
      for (Index y = 0; y < H; ++y)
        for (Index x = 0; x < W; ++x) {
          const double g = grad_out[((n * d.cout + co) * d.h + y) * d.w + x];
          for (std::size_t ci = 0; ci < d.cin; ++ci)
            for (Index ky = 0; ky < K; ++ky)
              for (Index kx = 0; kx < K; ++kx) {
                const Index iy = y + ky - r, ix = x + kx - r;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                grad_in[((n * d.cin + ci) * d.h + iy) * d.w + ix] +=
                    g * weight[((co * d.cin + ci) * d.k + ky) * d.k + kx];
              }
        }
}

void conv2d_backward_weight(std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_weight, std::span<double> grad_bias,
                            const ConvDims& d) {
  const Index r = static_cast<Index>(d.k / 2);
  const Index H = static_cast<Index>(d.h), W = static_cast<Index>(d.w), K = static_cast<Index>(d.k);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t co = 0; co < d.cout; ++co)
      for (Index y = 0; y < H; ++y)
        for (Index x = 0; x < W; ++x) {
          const double g = grad_out[((n * d.cout + co) * d.h + y) * d.w + x];
          if (!grad_bias.empty()) grad_bias[co] += g;
          for (std::size_t ci = 0; ci < d.cin; ++ci)
            for (Index ky = 0; ky < K; ++ky)
              for (Index kx = 0; kx < K; ++kx) {
                const Index iy = y + ky - r, ix = x + kx - r;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                grad_weight[((co * d.cin + ci) * d.k + ky) * d.k + kx] +=
                    g * in[((n * d.cin + ci) * d.h + iy) * d.w + ix];
              }
        }
}

}  // namespace m3hl::kernels::serial
