#include "m3hl/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m3hl/kernels.hpp"

namespace m3hl::nn {
namespace {

void require_rank4(const Tensor& x, const char* what) {
  if (x.rank() != 4) throw ShapeError(std::string(what) + ": expected NCHW, got " + shape_str(x.shape()));
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias) {
  require_rank4(x, "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != x.dim(1) || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("conv2d: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(x.shape()));
  }
  const kernels::ConvDims d{x.dim(0), x.dim(1), weight.dim(0), x.dim(2), x.dim(3), weight.dim(2)};
  Tensor out({d.n, d.cout, d.h, d.w});
  kernels::conv2d_forward(x.span(), weight.span(), bias ? bias->span() : std::span<const double>{},
                          out.span(), d);
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor* dx,
                     Tensor& dweight, Tensor* dbias) {
  const kernels::ConvDims d{x.dim(0), x.dim(1), weight.dim(0), x.dim(2), x.dim(3), weight.dim(2)};
  kernels::conv2d_backward_weight(dy.span(), x.span(), dweight.span(),
                                  dbias ? dbias->span() : std::span<double>{}, d);
  if (dx) {
    *dx = Tensor(x.shape());
    kernels::conv2d_backward_input(dy.span(), weight.span(), dx->span(), d);
  }
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, NormCache& cache,
                     double eps) {
  require_rank4(x, "instance_norm");
  const std::size_t N = x.dim(0), C = x.dim(1), M = x.dim(2) * x.dim(3);
  Tensor y(x.shape());
  cache.xhat = Tensor(x.shape());
  cache.inv_std.assign(N * C, 0.0);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (n * C + c) * M;
      double mean = 0.0;
      for (std::size_t i = 0; i < M; ++i) mean += x[off + i];
      mean /= static_cast<double>(M);
      double var = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        const double d = x[off + i] - mean;
        var += d * d;
      }
      var /= static_cast<double>(M);
      const double inv = 1.0 / std::sqrt(var + eps);
      cache.inv_std[n * C + c] = inv;
      for (std::size_t i = 0; i < M; ++i) {
        const double xh = (x[off + i] - mean) * inv;
        cache.xhat[off + i] = xh;
        y[off + i] = gamma[c] * xh + beta[c];
      }
    }
  }
  return y;
}

Tensor instance_norm_backward(const Tensor& dy, const NormCache& cache, const Tensor& gamma,
                              Tensor& dgamma, Tensor& dbeta) {
  const std::size_t N = dy.dim(0), C = dy.dim(1), M = dy.dim(2) * dy.dim(3);
  const double m = static_cast<double>(M);
  Tensor dx(dy.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (n * C + c) * M;
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xhat += dy[off + i] * cache.xhat[off + i];
      }
      dgamma[c] += sum_dy_xhat;
      dbeta[c] += sum_dy;
      const double scale = gamma[c] * cache.inv_std[n * C + c] / m;
      for (std::size_t i = 0; i < M; ++i) {
        dx[off + i] = scale * (m * dy[off + i] - sum_dy - cache.xhat[off + i] * sum_dy_xhat);
      }
    }
  }
  return dx;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
  return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope) {
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : slope * dy[i];
  return dx;
}

Tensor avg_pool2(const Tensor& x) {
  require_rank4(x, "avg_pool2");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 || W % 2) throw DivisibilityError("avg_pool2: odd spatial extent " + shape_str(x.shape()));
  Tensor y({N, C, H / 2, W / 2});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H / 2; ++i)
        for (std::size_t j = 0; j < W / 2; ++j) {
          y.at(n, c, i, j) = 0.25 * (x.at(n, c, 2 * i, 2 * j) + x.at(n, c, 2 * i, 2 * j + 1) +
                                     x.at(n, c, 2 * i + 1, 2 * j) + x.at(n, c, 2 * i + 1, 2 * j + 1));
        }
  return y;
}

Tensor avg_pool2_backward(const Tensor& dy) {
  const std::size_t N = dy.dim(0), C = dy.dim(1), H = dy.dim(2), W = dy.dim(3);
  Tensor dx({N, C, 2 * H, 2 * W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < 2 * H; ++y)
        for (std::size_t x = 0; x < 2 * W; ++x) dx.at(n, c, y, x) = 0.25 * dy.at(n, c, y / 2, x / 2);
  return dx;
}

Tensor upsample2(const Tensor& x) {
  require_rank4(x, "upsample2");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({N, C, 2 * H, 2 * W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < 2 * H; ++i)
        for (std::size_t j = 0; j < 2 * W; ++j) y.at(n, c, i, j) = x.at(n, c, i / 2, j / 2);
  return y;
}

Tensor upsample2_backward(const Tensor& dy) {
  const std::size_t N = dy.dim(0), C = dy.dim(1), H = dy.dim(2) / 2, W = dy.dim(3) / 2;
  Tensor dx({N, C, H, W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          dx.at(n, c, i, j) = dy.at(n, c, 2 * i, 2 * j) + dy.at(n, c, 2 * i, 2 * j + 1) +
                              dy.at(n, c, 2 * i + 1, 2 * j) + dy.at(n, c, 2 * i + 1, 2 * j + 1);
        }
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t N = a.dim(0), ca = a.dim(1), cb = b.dim(1), M = a.dim(2) * a.dim(3);
  Tensor y({N, ca + cb, a.dim(2), a.dim(3)});
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(a.data() + n * ca * M, ca * M, y.data() + n * (ca + cb) * M);
    std::copy_n(b.data() + n * cb * M, cb * M, y.data() + (n * (ca + cb) + ca) * M);
  }
  return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, std::size_t first) {
  const std::size_t N = x.dim(0), C = x.dim(1), M = x.dim(2) * x.dim(3);
  Tensor a({N, first, x.dim(2), x.dim(3)});
  Tensor b({N, C - first, x.dim(2), x.dim(3)});
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(x.data() + n * C * M, first * M, a.data() + n * first * M);
    std::copy_n(x.data() + (n * C + first) * M, (C - first) * M, b.data() + n * (C - first) * M);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace m3hl::nn
