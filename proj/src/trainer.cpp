#include "m3hl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "m3hl/losses.hpp"
#include "m3hl/maskgen.hpp"
#include "m3hl/mixer.hpp"

namespace m3hl {
namespace {

// Stream ids for derive_seed so that each consumer of randomness is independent.
enum Stream : std::uint64_t { kInitStream = 1, kMaskStream = 2, kLabeledStream = 3, kUnlabeledStream = 4 };

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite(const LossComponents& l) {
  return std::isfinite(l.mix) && std::isfinite(l.low) && std::isfinite(l.high) && std::isfinite(l.sup) &&
         std::isfinite(l.total);
}

std::string describe(const LossComponents& l) {
  std::ostringstream os;
  os << "mix=" << l.mix << " low=" << l.low << " high=" << l.high << " sup=" << l.sup << " total=" << l.total;
  return os.str();
}

Tensor scaled_concat(const Tensor& a, const Tensor& b, double scale) {
  Tensor out = concat_leading(a, b);
  for (auto& v : out.values()) v *= scale;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  require(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(batch_labeled >= 2 && batch_labeled % 2 == 0, "batch_labeled must be even and >= 2");
  require(batch_unlabeled == batch_labeled, "batch_unlabeled must equal batch_labeled (co-indexed mixing pairs)");
  require(patch_size.size() == 2, "patch_size must have two extents");
  for (auto p : patch_size) {
    require(p > 0 && image_size % p == 0, "image_size must be a multiple of every patch extent");
  }
  require(mask_ratio >= 0.0 && mask_ratio <= 1.0, "mask_ratio must be in [0, 1]");
  require(lambda_hl >= 0.0, "lambda_hl must be >= 0");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(ema_decay >= 0.0 && ema_decay <= 1.0, "ema_decay must be in [0, 1]");
  require(enable_mix || enable_hl || enable_sup, "no objective: enable at least one of mix, hl, sup");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(num_classes >= 2, "num_classes must be >= 2");
  require(n_labeled >= 1, "at least one labeled sample is required");
  require(n_val >= 1, "at least one validation sample is required");
  require(!(enable_mix || enable_hl) || n_unlabeled >= 1, "mix and hl losses need unlabeled samples");
  require(depth >= 1 && base_channels >= 1, "depth and base_channels must be >= 1");
  require(image_size > 0 && image_size % 16 == 0, "image_size must be a positive multiple of 16");
  require(image_size % (std::size_t{1} << depth) == 0, "image_size must be divisible by 2^depth");
  require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
}

NetConfig TrainConfig::net_config() const {
  NetConfig c;
  c.depth = depth;
  c.base_channels = base_channels;
  c.num_classes = num_classes;
  return c;
}

SynthOptions TrainConfig::synth_options() const { return {image_size, num_classes, noise_sigma}; }

IndexStream::IndexStream(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

void IndexStream::reshuffle() {
  order_ = all_indices(n_);
  SplitMix64 rng(derive_seed(seed_, 0, epoch_++));
  for (std::size_t i = n_; i-- > 1;) std::swap(order_[i], order_[rng.bounded(i + 1)]);
  pos_ = 0;
}

std::vector<std::size_t> IndexStream::take(std::size_t count) {
  if (n_ == 0) throw ShapeError("cannot draw from an empty pool");
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    if (pos_ >= order_.size()) reshuffle();
    out.push_back(order_[pos_++]);
  }
  return out;
}

TrainState init_state(const TrainConfig& config) {
  config.validate();
  SegNetwork student(config.net_config(), derive_seed(config.seed, kInitStream, 0));
  ParameterSet velocity = student.parameters().zeros_like();
  return {TeacherStudent(std::move(student), config.ema_decay), std::move(velocity), 0, 0};
}

NonFiniteLossError::NonFiniteLossError(std::size_t step, LossComponents losses)
    : Error("non-finite loss at step " + std::to_string(step) + ": " + describe(losses)),
      step_(step),
      losses_(losses) {}

Mask step_mask(const TrainConfig& config, const Shape& spatial, std::size_t step, int half) {
  const std::uint64_t base = derive_seed(config.seed, kMaskStream, step);
  const std::uint64_t stream = config.share_mask ? 0 : static_cast<std::uint64_t>(half);
  return generate_mask(spatial, config.patch_size, config.mask_ratio, derive_seed(base, 0, stream));
}

ObjectiveResult compute_objective(const SegNetwork& student, const SegNetwork& teacher, const TrainConfig& config,
                                  const Batch& batch, std::size_t step) {
  if (!(config.enable_mix || config.enable_hl || config.enable_sup)) {
    throw ConfigError("no objective: enable at least one of mix, hl, sup");
  }
  ObjectiveResult res{{}, student.parameters().zeros_like()};
  LossComponents& lc = res.losses;
  ParameterSet& grads = res.grads;

  if (batch.x_l.rank() != 4) throw ShapeError("labeled images must be (B, 1, H, W)");
  const Shape spatial{batch.x_l.dim(2), batch.x_l.dim(3)};
  require_same_shape(batch.y_l.shape(), {batch.x_l.dim(0), spatial[0], spatial[1]}, "labeled targets");

  if (config.enable_mix || config.enable_hl) {
    require_same_shape(batch.x_u.shape(), batch.x_l.shape(), "unlabeled vs labeled batch");
    // (1) teacher on the unlabeled halves; no gradient flows here.
    const ForwardResult t_out = teacher.forward(batch.x_u);
    const LabelMap pseudo = argmax_classes(t_out.logits);

    // (2) masks, (3) mutual mix of images and targets.
    const Mask mask_a = step_mask(config, spatial, step, 0);
    const Mask mask_b = step_mask(config, spatial, step, 1);
    const BatchHalves lab = split_batch(batch.x_l, batch.y_l);
    const auto unl = split_halves(batch.x_u);
    const auto pu = split_halves(pseudo);
    const MixedPair mix_a = mix_pair(unl.a, lab.images.a, pu.a, lab.labels->a, mask_a, config.num_classes);
    const MixedPair mix_b = mix_pair(unl.b, lab.images.b, pu.b, lab.labels->b, mask_b, config.num_classes);

    // (4) student on both mixed halves in one pass.
    ForwardCache cache;
    const ForwardResult s_out = student.forward(concat_leading(mix_a.image, mix_b.image), cache);

    // (5) losses and their gradients.
    OutputGrads og;
    if (config.enable_mix) {
      const auto logits = split_halves(s_out.logits);
      PairLossGrad m = loss_mix({logits.a, logits.b}, {mix_a.target, mix_b.target}, {mask_a, mask_b},
                                config.alpha, config.swap_mix_weighting);
      lc.mix = m.value;
      og.logits = concat_leading(m.grad_a, m.grad_b);
    }
    if (config.enable_hl) {
      const auto s_lo = split_halves(s_out.taps.low), s_hi = split_halves(s_out.taps.high);
      const auto t_lo = split_halves(t_out.taps.low), t_hi = split_halves(t_out.taps.high);
      HlLossGrad h = loss_hl({s_lo.a, s_lo.b}, {t_lo.a, t_lo.b}, {s_hi.a, s_hi.b}, {t_hi.a, t_hi.b});
      lc.low = h.low;
      lc.high = h.high;
      og.low = scaled_concat(h.grad_low.a, h.grad_low.b, config.lambda_hl);
      og.high = scaled_concat(h.grad_high.a, h.grad_high.b, config.lambda_hl);
    }
    student.backward(cache, og, grads);
  }

  if (config.enable_sup) {
    ForwardCache cache;
    const ForwardResult out = student.forward(batch.x_l, cache);
    LossGrad s = loss_sup(out.logits, batch.y_l);
    lc.sup = s.value;
    student.backward(cache, {std::move(s.grad), {}, {}}, grads);
  }

  lc.total = (config.enable_sup ? lc.sup : 0.0) +
             loss_total(config.enable_mix ? lc.mix : 0.0, config.enable_hl ? lc.low + lc.high : 0.0,
                        {config.lambda_hl, config.alpha});
  return res;
}

LossComponents train_step(TrainState& state, const TrainConfig& config, const Batch& batch) {
  SegNetwork& student = state.nets.student();
  ObjectiveResult obj = compute_objective(student, state.nets.teacher(), config, batch, state.step);
  const LossComponents lc = obj.losses;
  const ParameterSet& grads = obj.grads;
  if (config.enable_sup) ++state.sup_evaluations;
  if (!finite(lc)) throw NonFiniteLossError(state.step, lc);

  // (6) SGD with momentum and weight decay on the student.
  ParameterSet& params = student.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params[p].value;
    Tensor& v = state.velocity[p].value;
    const Tensor& g = grads[p].value;
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = config.momentum * v[i] + g[i] + config.weight_decay * w[i];
      w[i] -= config.lr * v[i];
    }
  }
  // (7) teacher follows the student.
  state.nets.ema_update(warmup_decay(config.ema_decay, state.step));
  ++state.step;
  return lc;
}

LabelMap predict_all(const SegNetwork& net, const std::vector<Sample>& samples, std::size_t chunk) {
  if (samples.empty()) throw ShapeError("no samples to predict");
  LabelMap out;
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(samples.size(), begin + chunk); ++i) idx.push_back(i);
    LabelMap part = net.predict_labels(stack_images(samples, idx));
    out = out.empty() ? std::move(part) : concat_leading(out, part);
  }
  return out;
}

MetricsReport evaluate(const SegNetwork& net, const std::vector<Sample>& samples, std::size_t num_classes) {
  return evaluate_segmentation(predict_all(net, samples), stack_labels(samples, all_indices(samples.size())),
                               num_classes);
}

RunResult run_experiment(const TrainConfig& config, const DatasetSplit& data, const ProgressFn& progress) {
  config.validate();
  if (data.options.size != config.image_size || data.options.num_classes != config.num_classes) {
    throw ConfigError("dataset geometry does not match the training configuration");
  }
  if (data.labeled.empty() || data.val.empty()) throw ConfigError("dataset needs labeled and validation samples");
  const bool needs_unlabeled = config.enable_mix || config.enable_hl;
  if (needs_unlabeled && data.unlabeled.empty()) throw ConfigError("mix and hl losses need unlabeled samples");

  const auto t0 = std::chrono::steady_clock::now();
  RunResult result{{}, init_state(config)};
  RunRecord& rec = result.record;
  rec.config = config;
  TrainState& state = result.state;

  IndexStream labeled(data.labeled.size(), derive_seed(config.seed, kLabeledStream, 0));
  IndexStream unlabeled(data.unlabeled.size(), derive_seed(config.seed, kUnlabeledStream, 0));
  const LabelMap val_labels = stack_labels(data.val, all_indices(data.val.size()));
  const auto eval_now = [&](std::size_t step) {
    rec.evals.push_back({step, evaluate_segmentation(predict_all(state.nets.student(), data.val), val_labels,
                                                     config.num_classes)});
  };

  eval_now(0);
  if (progress) progress(rec, 0);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const auto li = labeled.take(config.batch_labeled);
    Batch batch{stack_images(data.labeled, li), stack_labels(data.labeled, li), {}};
    if (needs_unlabeled) batch.x_u = stack_images(data.unlabeled, unlabeled.take(config.batch_unlabeled));
    try {
      rec.losses.push_back({it, train_step(state, config, batch)});
    } catch (const NonFiniteLossError& e) {
      rec.losses.push_back({it, e.losses()});
      rec.status = "aborted";
      rec.abort_reason = e.what();
      break;
    }
    if (it % config.eval_every == 0 || it == config.iterations) eval_now(it);
    if (progress) progress(rec, it);
  }
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

RunResult run_experiment(const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  return run_experiment(
      config, make_split(config.n_labeled, config.n_unlabeled, config.n_val, config.data_seed, config.synth_options()),
      progress);
}

}  // namespace m3hl
