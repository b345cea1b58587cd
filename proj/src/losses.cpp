#include "m3hl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace m3hl {
namespace {

void check_weights(double sum_w, const Tensor& weight) {
  for (double w : weight.values()) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw RangeError("weight map entries must be finite and >= 0");
  }
  if (!(sum_w > 0.0)) throw DegenerateWeightError("weight map has no positive entry");
}

void check_quad(const StreamPair<Tensor>& f_mix, const StreamPair<Tensor>& f_u, const char* what) {
  require_same_shape(f_mix.a.shape(), f_mix.b.shape(), what);
  require_same_shape(f_mix.a.shape(), f_u.a.shape(), what);
  require_same_shape(f_mix.a.shape(), f_u.b.shape(), what);
  if (f_mix.a.empty()) throw ShapeError(std::string(what) + ": empty feature arrays");
}

}  // namespace

LossGrad ce_dice(const Tensor& logits, const LabelMap& target, const Tensor& weight) {
  if (logits.rank() != 4) throw ShapeError("ce_dice: logits must be (N, C, H, W), got " + shape_str(logits.shape()));
  const std::size_t N = logits.dim(0), C = logits.dim(1), M = logits.dim(2) * logits.dim(3);
  require_same_shape(target.shape(), {N, logits.dim(2), logits.dim(3)}, "ce_dice target");
  const bool broadcast = weight.shape() == Shape{logits.dim(2), logits.dim(3)};
  if (!broadcast) require_same_shape(weight.shape(), target.shape(), "ce_dice weight");
  const auto w_at = [&](std::size_t n, std::size_t i) { return broadcast ? weight[i] : weight[n * M + i]; };

  double sum_w = 0.0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t i = 0; i < M; ++i) sum_w += w_at(n, i);
  check_weights(sum_w, weight);

  Tensor prob(logits.shape());
  double ce = 0.0;
  std::vector<double> inter(C, 0.0), denom(C, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < M; ++i) {
      const std::size_t y = target[n * M + i];
      if (y >= C) throw RangeError("target class " + std::to_string(y) + " outside [0, " + std::to_string(C) + ")");
      double mx = logits[n * C * M + i];
      for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits[(n * C + c) * M + i]);
      double z = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double e = std::exp(logits[(n * C + c) * M + i] - mx);
        prob[(n * C + c) * M + i] = e;
        z += e;
      }
      const double w = w_at(n, i);
      for (std::size_t c = 0; c < C; ++c) {
        const double p = prob[(n * C + c) * M + i] / z;
        prob[(n * C + c) * M + i] = p;
        denom[c] += w * p;
      }
      ce += w * (std::log(z) + mx - logits[(n * C + y) * M + i]);
      inter[y] += w * prob[(n * C + y) * M + i];
      denom[y] += w;
    }
  }
  ce /= sum_w;
  double dice_mean = 0.0;
  for (std::size_t c = 0; c < C; ++c) dice_mean += (2.0 * inter[c] + kDiceEps) / (denom[c] + kDiceEps);
  dice_mean /= static_cast<double>(C);

  // dL/dp_c for the Dice term, then through the softmax Jacobian together with CE.
  Tensor grad(logits.shape());
  std::vector<double> gp(C);
  const double inv_c = 1.0 / static_cast<double>(C);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < M; ++i) {
      const std::size_t y = target[n * M + i];
      const double w = w_at(n, i);
      double dot = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double u = denom[c] + kDiceEps;
        const double t = c == y ? 1.0 : 0.0;
        gp[c] = -inv_c * (2.0 * w * t / u - (2.0 * inter[c] + kDiceEps) * w / (u * u));
        dot += gp[c] * prob[(n * C + c) * M + i];
      }
      for (std::size_t c = 0; c < C; ++c) {
        const double p = prob[(n * C + c) * M + i];
        const double t = c == y ? 1.0 : 0.0;
        grad[(n * C + c) * M + i] = w * (p - t) / sum_w + p * (gp[c] - dot);
      }
    }
  }
  return {ce + (1.0 - dice_mean), std::move(grad)};
}

double loss_ce_dice(const Tensor& logits, const LabelMap& target, const Tensor& weight) {
  return ce_dice(logits, target, weight).value;
}

PairLossGrad loss_mix(const StreamPair<Tensor>& logits, const StreamPair<LabelMap>& targets,
                      const StreamPair<Mask>& masks, double alpha, bool swap_orientation) {
  if (!(alpha >= 0.0)) throw RangeError("alpha must be >= 0");
  require_same_shape(logits.a.shape(), logits.b.shape(), "loss_mix streams");
  LossGrad a = ce_dice(logits.a, targets.a, mask_weight_map(masks.a, alpha, swap_orientation));
  LossGrad b = ce_dice(logits.b, targets.b, mask_weight_map(masks.b, alpha, swap_orientation));
  return {a.value + b.value, std::move(a.grad), std::move(b.grad)};
}

PairLossGrad loss_low(const StreamPair<Tensor>& f_mix, const StreamPair<Tensor>& f_u) {
  check_quad(f_mix, f_u, "loss_low");
  const std::size_t n = f_mix.a.size();
  const double scale = 0.25 / static_cast<double>(n);
  PairLossGrad out{0.0, Tensor(f_mix.a.shape()), Tensor(f_mix.a.shape())};
  const Tensor* mix[2] = {&f_mix.a, &f_mix.b};
  const Tensor* u[2] = {&f_u.a, &f_u.b};
  Tensor* grad[2] = {&out.grad_a, &out.grad_b};
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (*mix[s])[i] - (*u[t])[i];
        sum += std::abs(d);
        (*grad[s])[i] += scale * static_cast<double>((d > 0.0) - (d < 0.0));
      }
      out.value += scale * sum;
    }
  }
  return out;
}

PairLossGrad loss_high(const StreamPair<Tensor>& f_mix, const StreamPair<Tensor>& f_u) {
  check_quad(f_mix, f_u, "loss_high");
  const std::size_t batch = f_mix.a.dim(0);
  const std::size_t per = f_mix.a.size() / batch;
  const double scale = 0.25 / static_cast<double>(batch);
  PairLossGrad out{0.0, Tensor(f_mix.a.shape()), Tensor(f_mix.a.shape())};
  const Tensor* mix[2] = {&f_mix.a, &f_mix.b};
  const Tensor* u[2] = {&f_u.a, &f_u.b};
  Tensor* grad[2] = {&out.grad_a, &out.grad_b};
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) {
      for (std::size_t i = 0; i < batch; ++i) {
        const double* a = mix[s]->data() + i * per;
        const double* b = u[t]->data() + i * per;
        double ab = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t k = 0; k < per; ++k) {
          ab += a[k] * b[k];
          aa += a[k] * a[k];
          bb += b[k] * b[k];
        }
        const double na = std::max(std::sqrt(aa), kCosineEps);
        const double nb = std::max(std::sqrt(bb), kCosineEps);
        const double cos = ab / (na * nb);
        out.value += scale * (1.0 - cos);
        // d cos / d a; the norm of a is treated as constant below the guard.
        const double ka = std::sqrt(aa) > kCosineEps ? cos / (na * na) : 0.0;
        double* g = grad[s]->data() + i * per;
        for (std::size_t k = 0; k < per; ++k) g[k] -= scale * (b[k] / (na * nb) - ka * a[k]);
      }
    }
  }
  return out;
}

HlLossGrad loss_hl(const StreamPair<Tensor>& f_mix_lo, const StreamPair<Tensor>& f_u_lo,
                   const StreamPair<Tensor>& f_mix_hi, const StreamPair<Tensor>& f_u_hi) {
  PairLossGrad lo = loss_low(f_mix_lo, f_u_lo);
  PairLossGrad hi = loss_high(f_mix_hi, f_u_hi);
  return {lo.value + hi.value,
          lo.value,
          hi.value,
          {std::move(lo.grad_a), std::move(lo.grad_b)},
          {std::move(hi.grad_a), std::move(hi.grad_b)}};
}

LossGrad loss_sup(const Tensor& logits, const LabelMap& y_l) {
  if (logits.rank() != 4) throw ShapeError("loss_sup: logits must be (N, C, H, W)");
  return ce_dice(logits, y_l, Tensor({logits.dim(2), logits.dim(3)}, 1.0));
}

}  // namespace m3hl
