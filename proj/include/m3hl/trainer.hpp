#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "m3hl/ema.hpp"
#include "m3hl/maskgen.hpp"
#include "m3hl/metrics.hpp"
#include "m3hl/net.hpp"
#include "m3hl/rng.hpp"
#include "m3hl/synthdata.hpp"

namespace m3hl {

struct TrainConfig {
  // Optimiser: SGD with momentum and L2 weight decay.
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::size_t iterations = 2000;
  std::size_t batch_labeled = 8;
  std::size_t batch_unlabeled = 8;

  // Mutual mask mix.
  Shape patch_size{16, 16};
  double mask_ratio = 0.5;
  bool share_mask = true;            // one M for both streams of a batch
  bool swap_mix_weighting = false;   // weight alpha on M instead of on 1 - M

  double lambda_hl = 0.5;
  double alpha = 0.5;
  double ema_decay = 0.99;

  bool enable_mix = true;
  bool enable_hl = true;
  bool enable_sup = false;

  std::uint64_t seed = 0;
  std::size_t eval_every = 200;

  // Synthetic data.
  std::size_t image_size = 64;
  std::size_t num_classes = 4;
  std::size_t n_labeled = 8;
  std::size_t n_unlabeled = 72;
  std::size_t n_val = 20;
  std::uint64_t data_seed = 0;
  double noise_sigma = 0.05;

  // Network.
  std::size_t depth = 4;
  std::size_t base_channels = 16;

  /// Throws ConfigError on any inconsistent setting.
  void validate() const;
  NetConfig net_config() const;
  SynthOptions synth_options() const;
};

struct Batch {
  Tensor x_l;   // (B, 1, H, W)
  LabelMap y_l; // (B, H, W)
  Tensor x_u;   // (B, 1, H, W)
};

struct LossComponents {
  double mix = 0.0;
  double low = 0.0;
  double high = 0.0;
  double sup = 0.0;
  double total = 0.0;
};

/// Draws indices epoch by epoch from a fresh seeded shuffle of [0, n).
class IndexStream {
 public:
  IndexStream(std::size_t n, std::uint64_t seed);
  std::vector<std::size_t> take(std::size_t count);

 private:
  void reshuffle();

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

struct TrainState {
  TeacherStudent nets;
  ParameterSet velocity;
  std::size_t step = 0;
  std::size_t sup_evaluations = 0;  // number of steps that evaluated the supervised loss
};

TrainState init_state(const TrainConfig& config);

/// Thrown when a loss component is not finite; carries the offending values.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(std::size_t step, LossComponents losses);
  std::size_t step() const { return step_; }
  const LossComponents& losses() const { return losses_; }

 private:
  std::size_t step_;
  LossComponents losses_;
};

/// Mask for half 0 (a) or 1 (b) at a given step; both halves share one mask
/// when config.share_mask is set.
Mask step_mask(const TrainConfig& config, const Shape& spatial, std::size_t step, int half);

struct ObjectiveResult {
  LossComponents losses;
  ParameterSet grads;  // d total / d student parameters
};

/// Enabled losses and their parameter gradients for one batch, without
/// updating anything. Masks depend on (config.seed, step).
ObjectiveResult compute_objective(const SegNetwork& student, const SegNetwork& teacher, const TrainConfig& config,
                                  const Batch& batch, std::size_t step);

/// One iteration: teacher pseudo-labels and taps on x_u, mask generation,
/// mutual mix, student forward on the mixed halves, enabled losses, SGD on the
/// student and EMA update of the teacher.
LossComponents train_step(TrainState& state, const TrainConfig& config, const Batch& batch);

/// Student predictions for every sample, evaluated in chunks.
LabelMap predict_all(const SegNetwork& net, const std::vector<Sample>& samples, std::size_t chunk = 8);
MetricsReport evaluate(const SegNetwork& net, const std::vector<Sample>& samples, std::size_t num_classes);

struct LossRecord {
  std::size_t step = 0;
  LossComponents losses;
};

struct EvalRecord {
  std::size_t step = 0;
  MetricsReport metrics;
};

struct RunRecord {
  TrainConfig config;
  std::vector<LossRecord> losses;
  std::vector<EvalRecord> evals;
  std::string status = "completed";  // or "aborted"
  std::string abort_reason;
  double wall_clock_seconds = 0.0;

  const MetricsReport& final_metrics() const { return evals.back().metrics; }
  bool completed() const { return status == "completed"; }
};

struct RunResult {
  RunRecord record;
  TrainState state;
};

using ProgressFn = std::function<void(const RunRecord&, std::size_t step)>;

/// Trains on `data` for config.iterations steps, evaluating the student on the
/// validation split at step 0, every eval_every steps and at the end. A
/// non-finite loss stops the run and marks the record aborted.
RunResult run_experiment(const TrainConfig& config, const DatasetSplit& data, const ProgressFn& progress = {});
/// Same, generating the synthetic split described by the config.
RunResult run_experiment(const TrainConfig& config, const ProgressFn& progress = {});

}  // namespace m3hl
