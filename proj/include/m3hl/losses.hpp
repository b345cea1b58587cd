#pragma once

#include "m3hl/maskgen.hpp"
#include "m3hl/ndarray.hpp"

namespace m3hl {

struct LossWeights {
  double lambda_hl = 0.5;  // strength of the high/low feature consistency term
  double alpha = 0.5;      // weight of ground-truth regions in the mix loss
};

inline constexpr double kDiceEps = 1e-5;
inline constexpr double kCosineEps = 1e-8;

/// A scalar objective together with its gradient w.r.t. one input.
struct LossGrad {
  double value = 0.0;
  Tensor grad;
};

/// Objective with gradients for the (a, b) pair of inputs it depends on.
struct PairLossGrad {
  double value = 0.0;
  Tensor grad_a;
  Tensor grad_b;
};

template <class T>
struct StreamPair {
  T a;
  T b;
};

/// Weighted cross-entropy plus weighted soft Dice on softmax probabilities.
///
///   CE   = sum(w * -log p_y) / sum(w)
///   Dice = 1 - mean_c (2 sum(w p_c t_c) + eps) / (sum(w (p_c + t_c)) + eps)
///
/// Sums run over every voxel of the batch. `weight` is (N, H, W) or a single
/// (H, W) map broadcast over the batch.
LossGrad ce_dice(const Tensor& logits, const LabelMap& target, const Tensor& weight);
double loss_ce_dice(const Tensor& logits, const LabelMap& target, const Tensor& weight);

/// Sum over both streams of ce_dice with W = M + alpha (1 - M) (or the swapped
/// orientation alpha M + (1 - M)).
PairLossGrad loss_mix(const StreamPair<Tensor>& logits, const StreamPair<LabelMap>& targets,
                      const StreamPair<Mask>& masks, double alpha, bool swap_orientation = false);

/// (1/4) sum_{s,t} mean |f_mix^s - f_u^t|. Gradients are w.r.t. f_mix.
PairLossGrad loss_low(const StreamPair<Tensor>& f_mix, const StreamPair<Tensor>& f_u);

/// (1/4) sum_{s,t} batch-mean [1 - cos(f_mix^s[i], f_u^t[i])], each sample
/// flattened. Gradients are w.r.t. f_mix.
PairLossGrad loss_high(const StreamPair<Tensor>& f_mix, const StreamPair<Tensor>& f_u);

struct HlLossGrad {
  double value = 0.0;
  double low = 0.0;
  double high = 0.0;
  StreamPair<Tensor> grad_low;
  StreamPair<Tensor> grad_high;
};

HlLossGrad loss_hl(const StreamPair<Tensor>& f_mix_lo, const StreamPair<Tensor>& f_u_lo,
                   const StreamPair<Tensor>& f_mix_hi, const StreamPair<Tensor>& f_u_hi);

/// mix + lambda * hl.
inline double loss_total(double mix, double hl, const LossWeights& weights) {
  return mix + weights.lambda_hl * hl;
}

/// Unweighted CE + Dice on labeled data.
LossGrad loss_sup(const Tensor& logits, const LabelMap& y_l);

}  // namespace m3hl
