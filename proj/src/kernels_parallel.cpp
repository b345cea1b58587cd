#include <algorithm>
#include <cstdint>
#include <vector>

#include <cblas.h>

#include "m3hl/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// Convolution as GEMM over groups of samples: the group's receptive fields are
// unfolded into a (cin*k*k, g*h*w) column matrix so that the matrix products
// stay wide even at the coarsest U-Net levels.
namespace m3hl::kernels {
namespace {

using Index = std::int64_t;

// Target number of columns per group.
constexpr Index kGroupColumns = 2048;

Index group_size(const ConvDims& d) {
  const Index plane = static_cast<Index>(d.h * d.w);
  return std::clamp<Index>((kGroupColumns + plane - 1) / plane, 1, static_cast<Index>(d.n));
}

void im2col(const double* in, const ConvDims& d, Index n0, Index g, double* col) {
  const Index CI = static_cast<Index>(d.cin), H = static_cast<Index>(d.h), W = static_cast<Index>(d.w);
  const Index K = static_cast<Index>(d.k), r = K / 2, plane = H * W, cols = g * plane;
#pragma omp parallel for collapse(2) schedule(static)
  for (Index ci = 0; ci < CI; ++ci) {
    for (Index kk = 0; kk < K * K; ++kk) {
      const Index ky = kk / K - r, kx = kk % K - r;
      double* row = col + (ci * K * K + kk) * cols;
      for (Index j = 0; j < g; ++j) {
        const double* src = in + ((n0 + j) * CI + ci) * plane;
        double* dst = row + j * plane;
        for (Index y = 0; y < H; ++y) {
          const Index iy = y + ky;
          double* o = dst + y * W;
          if (iy < 0 || iy >= H) {
            std::fill(o, o + W, 0.0);
            continue;
          }
          const double* s = src + iy * W;
          for (Index x = 0; x < W; ++x) {
            const Index ix = x + kx;
            o[x] = (ix >= 0 && ix < W) ? s[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Accumulates the column matrix back into (n, ci) planes; each plane is owned
// by one thread and its k*k contributions are added in a fixed order.
void col2im(const double* col, const ConvDims& d, Index n0, Index g, double* out) {
  const Index CI = static_cast<Index>(d.cin), H = static_cast<Index>(d.h), W = static_cast<Index>(d.w);
  const Index K = static_cast<Index>(d.k), r = K / 2, plane = H * W, cols = g * plane;
#pragma omp parallel for collapse(2) schedule(static)
  for (Index j = 0; j < g; ++j) {
    for (Index ci = 0; ci < CI; ++ci) {
      double* dst = out + ((n0 + j) * CI + ci) * plane;
      std::fill(dst, dst + plane, 0.0);
      for (Index kk = 0; kk < K * K; ++kk) {
        const Index ky = kk / K - r, kx = kk % K - r;
        const double* src = col + (ci * K * K + kk) * cols + j * plane;
        for (Index y = 0; y < H; ++y) {
          const Index iy = y + ky;
          if (iy < 0 || iy >= H) continue;
          const Index x0 = std::max<Index>(0, -kx), x1 = std::min<Index>(W, W - kx);
          double* o = dst + iy * W + kx;
          const double* s = src + y * W;
#pragma omp simd
          for (Index x = x0; x < x1; ++x) o[x] += s[x];
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out, const ConvDims& d) {
  const Index N = static_cast<Index>(d.n), CO = static_cast<Index>(d.cout);
  const Index KK = static_cast<Index>(d.cin * d.k * d.k), plane = static_cast<Index>(d.h * d.w);
  const Index G = group_size(d);
  std::vector<double> col(static_cast<std::size_t>(KK * G * plane));
  std::vector<double> prod(static_cast<std::size_t>(CO * G * plane));
  for (Index n0 = 0; n0 < N; n0 += G) {
    const Index g = std::min(G, N - n0), cols = g * plane;
    im2col(in.data(), d, n0, g, col.data());
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(CO), static_cast<int>(cols),
                static_cast<int>(KK), 1.0, weight.data(), static_cast<int>(KK), col.data(), static_cast<int>(cols),
                0.0, prod.data(), static_cast<int>(cols));
#pragma omp parallel for collapse(2) schedule(static)
    for (Index j = 0; j < g; ++j) {
      for (Index co = 0; co < CO; ++co) {
        const double b = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)];
        const double* s = prod.data() + co * cols + j * plane;
        double* o = out.data() + ((n0 + j) * CO + co) * plane;
        for (Index i = 0; i < plane; ++i) o[i] = s[i] + b;
      }
    }
  }
}

void conv2d_backward_input(std::span<const double> grad_out, std::span<const double> weight,
                           std::span<double> grad_in, const ConvDims& d) {
  const Index N = static_cast<Index>(d.n), CO = static_cast<Index>(d.cout);
  const Index KK = static_cast<Index>(d.cin * d.k * d.k), plane = static_cast<Index>(d.h * d.w);
  const Index G = group_size(d);
  std::vector<double> dy(static_cast<std::size_t>(CO * G * plane));
  std::vector<double> col(static_cast<std::size_t>(KK * G * plane));
  for (Index n0 = 0; n0 < N; n0 += G) {
    const Index g = std::min(G, N - n0), cols = g * plane;
#pragma omp parallel for collapse(2) schedule(static)
    for (Index co = 0; co < CO; ++co) {
      for (Index j = 0; j < g; ++j) {
        std::copy_n(grad_out.data() + ((n0 + j) * CO + co) * plane, plane, dy.data() + co * cols + j * plane);
      }
    }
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(KK), static_cast<int>(cols),
                static_cast<int>(CO), 1.0, weight.data(), static_cast<int>(KK), dy.data(), static_cast<int>(cols),
                0.0, col.data(), static_cast<int>(cols));
    col2im(col.data(), d, n0, g, grad_in.data());
  }
}

void conv2d_backward_weight(std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_weight, std::span<double> grad_bias,
                            const ConvDims& d) {
  const Index N = static_cast<Index>(d.n), CO = static_cast<Index>(d.cout);
  const Index KK = static_cast<Index>(d.cin * d.k * d.k), plane = static_cast<Index>(d.h * d.w);
  const Index G = group_size(d);
  std::vector<double> dy(static_cast<std::size_t>(CO * G * plane));
  std::vector<double> col(static_cast<std::size_t>(KK * G * plane));
  for (Index n0 = 0; n0 < N; n0 += G) {
    const Index g = std::min(G, N - n0), cols = g * plane;
#pragma omp parallel for collapse(2) schedule(static)
    for (Index co = 0; co < CO; ++co) {
      for (Index j = 0; j < g; ++j) {
        std::copy_n(grad_out.data() + ((n0 + j) * CO + co) * plane, plane, dy.data() + co * cols + j * plane);
      }
    }
    im2col(in.data(), d, n0, g, col.data());
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(CO), static_cast<int>(KK),
                static_cast<int>(cols), 1.0, dy.data(), static_cast<int>(cols), col.data(), static_cast<int>(cols),
                1.0, grad_weight.data(), static_cast<int>(KK));
    if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static)
      for (Index co = 0; co < CO; ++co) {
        double acc = 0.0;
        const double* s = dy.data() + co * cols;
        for (Index i = 0; i < cols; ++i) acc += s[i];
        grad_bias[static_cast<std::size_t>(co)] += acc;
      }
    }
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace m3hl::kernels
