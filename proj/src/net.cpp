#include "m3hl/net.hpp"

#include <cmath>

#include "m3hl/rng.hpp"

namespace m3hl {

void ParameterSet::add(std::string name, Tensor value) {
  params_.push_back({std::move(name), std::move(value)});
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.value;
  throw ShapeError("no parameter named " + name);
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& p : params_) out.add(p.name, Tensor(p.value.shape()));
  return out;
}

void ParameterSet::require_same_structure(const ParameterSet& other) const {
  if (other.size() != size()) {
    throw ShapeError("parameter sets differ in length: " + std::to_string(size()) + " vs " +
                     std::to_string(other.size()));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (params_[i].name != other[i].name || params_[i].value.shape() != other[i].value.shape()) {
      throw ShapeError("parameter " + std::to_string(i) + " differs: " + params_[i].name +
                       shape_str(params_[i].value.shape()) + " vs " + other[i].name +
                       shape_str(other[i].value.shape()));
    }
  }
}

SegNetwork::SegNetwork(NetConfig config, std::uint64_t seed) : config_(config) {
  if (config_.depth < 1 || config_.base_channels < 1 || config_.in_channels < 1 ||
      config_.num_classes < 2) {
    throw RangeError("network needs depth >= 1, base_channels >= 1, in_channels >= 1, num_classes >= 2");
  }
  const auto ch = [&](std::size_t level) { return config_.base_channels << level; };
  encoder_.push_back(add_block("enc0", config_.in_channels, ch(0)));
  for (std::size_t i = 1; i <= config_.depth; ++i) {
    encoder_.push_back(add_block("enc" + std::to_string(i), ch(i - 1), ch(i)));
  }
  decoder_.resize(config_.depth);
  for (std::size_t i = config_.depth; i >= 1; --i) {
    decoder_[i - 1] = add_block("dec" + std::to_string(i - 1), ch(i) + ch(i - 1), ch(i - 1));
  }
  head_weight_ = params_.size();
  params_.add("head.weight", Tensor({config_.num_classes, ch(0), 1, 1}));
  head_bias_ = params_.size();
  params_.add("head.bias", Tensor({config_.num_classes}));

  // He-uniform conv weights, bound sqrt(6 / fan_in), drawn in declaration order.
  SplitMix64 rng(seed);
  for (auto& p : params_) {
    const auto& s = p.value.shape();
    if (p.value.rank() == 4) {
      const double bound = std::sqrt(6.0 / static_cast<double>(s[1] * s[2] * s[3]));
      for (auto& v : p.value.values()) v = rng.uniform(-bound, bound);
    } else if (p.name.ends_with(".gamma")) {
      p.value.fill(1.0);
    }
  }
}

SegNetwork::BlockParams SegNetwork::add_block(const std::string& prefix, std::size_t cin,
                                              std::size_t cout) {
  BlockParams b{};
  b.conv1 = params_.size();
  params_.add(prefix + ".conv1.weight", Tensor({cout, cin, 3, 3}));
  b.gamma1 = params_.size();
  params_.add(prefix + ".norm1.gamma", Tensor({cout}));
  b.beta1 = params_.size();
  params_.add(prefix + ".norm1.beta", Tensor({cout}));
  b.conv2 = params_.size();
  params_.add(prefix + ".conv2.weight", Tensor({cout, cout, 3, 3}));
  b.gamma2 = params_.size();
  params_.add(prefix + ".norm2.gamma", Tensor({cout}));
  b.beta2 = params_.size();
  params_.add(prefix + ".norm2.beta", Tensor({cout}));
  return b;
}

Shape SegNetwork::low_tap_shape(std::size_t n, std::size_t h, std::size_t w) const {
  return {n, config_.base_channels * 2, h / 2, w / 2};
}

Shape SegNetwork::high_tap_shape(std::size_t n, std::size_t h, std::size_t w) const {
  const std::size_t f = std::size_t{1} << config_.depth;
  return {n, config_.base_channels * f, h / f, w / f};
}

void SegNetwork::check_input(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != config_.in_channels) {
    throw ShapeError("network input must be (N, " + std::to_string(config_.in_channels) +
                     ", H, W), got " + shape_str(x.shape()));
  }
  const std::size_t f = std::size_t{1} << config_.depth;
  if (x.dim(0) == 0 || x.dim(2) == 0 || x.dim(2) % f != 0 || x.dim(3) == 0 || x.dim(3) % f != 0) {
    throw DivisibilityError("spatial extent " + shape_str(x.shape()) + " must be a positive multiple of " +
                            std::to_string(f));
  }
}

Tensor SegNetwork::block_forward(const BlockParams& b, const Tensor& x, BlockCache& c) const {
  const double slope = config_.leaky_slope;
  c.input = x;
  c.pre1 = nn::instance_norm(nn::conv2d(x, params_[b.conv1].value, nullptr), params_[b.gamma1].value,
                             params_[b.beta1].value, c.norm1);
  c.act1 = nn::leaky_relu(c.pre1, slope);
  c.pre2 = nn::instance_norm(nn::conv2d(c.act1, params_[b.conv2].value, nullptr),
                             params_[b.gamma2].value, params_[b.beta2].value, c.norm2);
  return nn::leaky_relu(c.pre2, slope);
}

Tensor SegNetwork::block_backward(const BlockParams& b, const BlockCache& c, const Tensor& dy,
                                  ParameterSet& g) const {
  const double slope = config_.leaky_slope;
  Tensor d = nn::leaky_relu_backward(c.pre2, dy, slope);
  d = nn::instance_norm_backward(d, c.norm2, params_[b.gamma2].value, g[b.gamma2].value, g[b.beta2].value);
  Tensor dx;
  nn::conv2d_backward(c.act1, params_[b.conv2].value, d, &dx, g[b.conv2].value, nullptr);
  d = nn::leaky_relu_backward(c.pre1, dx, slope);
  d = nn::instance_norm_backward(d, c.norm1, params_[b.gamma1].value, g[b.gamma1].value, g[b.beta1].value);
  nn::conv2d_backward(c.input, params_[b.conv1].value, d, &dx, g[b.conv1].value, nullptr);
  return dx;
}

ForwardResult SegNetwork::forward(const Tensor& x) const {
  ForwardCache cache;
  return forward(x, cache);
}

ForwardResult SegNetwork::forward(const Tensor& x, ForwardCache& cache) const {
  check_input(x);
  const std::size_t depth = config_.depth;
  cache.encoder.assign(depth + 1, {});
  cache.decoder.assign(depth, {});
  cache.encoder_out.assign(depth + 1, {});

  cache.encoder_out[0] = block_forward(encoder_[0], x, cache.encoder[0]);
  for (std::size_t i = 1; i <= depth; ++i) {
    cache.encoder_out[i] = block_forward(encoder_[i], nn::avg_pool2(cache.encoder_out[i - 1]), cache.encoder[i]);
  }
  Tensor cur = cache.encoder_out[depth];
  for (std::size_t i = depth; i >= 1; --i) {
    cur = block_forward(decoder_[i - 1], nn::concat_channels(nn::upsample2(cur), cache.encoder_out[i - 1]),
                        cache.decoder[i - 1]);
  }
  cache.head_input = cur;
  Tensor logits = nn::conv2d(cur, params_[head_weight_].value, &params_[head_bias_].value);
  return {std::move(logits), {cache.encoder_out[1], cache.encoder_out[depth]}};
}

ParameterSet SegNetwork::backward(const ForwardCache& cache, const OutputGrads& grads) const {
  ParameterSet out = params_.zeros_like();
  backward(cache, grads, out);
  return out;
}

void SegNetwork::backward(const ForwardCache& cache, const OutputGrads& grads, ParameterSet& g) const {
  params_.require_same_structure(g);
  const std::size_t depth = config_.depth;
  std::vector<Tensor> d_enc(depth + 1);
  for (std::size_t i = 0; i <= depth; ++i) d_enc[i] = Tensor(cache.encoder_out[i].shape());

  if (!grads.logits.empty()) {
    require_same_shape(grads.logits.shape(),
                       {cache.head_input.dim(0), config_.num_classes, cache.head_input.dim(2),
                        cache.head_input.dim(3)},
                       "logit gradient");
    Tensor d_cur;
    nn::conv2d_backward(cache.head_input, params_[head_weight_].value, grads.logits, &d_cur,
                        g[head_weight_].value, &g[head_bias_].value);
    for (std::size_t i = 1; i <= depth; ++i) {
      const Tensor d_cat = block_backward(decoder_[i - 1], cache.decoder[i - 1], d_cur, g);
      auto [d_up, d_skip] = nn::split_channels(d_cat, config_.base_channels << i);
      for (std::size_t k = 0; k < d_skip.size(); ++k) d_enc[i - 1][k] += d_skip[k];
      d_cur = nn::upsample2_backward(d_up);
    }
    for (std::size_t k = 0; k < d_cur.size(); ++k) d_enc[depth][k] += d_cur[k];
  }
  if (!grads.low.empty()) {
    require_same_shape(grads.low.shape(), d_enc[1].shape(), "low tap gradient");
    for (std::size_t k = 0; k < grads.low.size(); ++k) d_enc[1][k] += grads.low[k];
  }
  if (!grads.high.empty()) {
    require_same_shape(grads.high.shape(), d_enc[depth].shape(), "high tap gradient");
    for (std::size_t k = 0; k < grads.high.size(); ++k) d_enc[depth][k] += grads.high[k];
  }
  for (std::size_t i = depth; i >= 1; --i) {
    const Tensor d_in = block_backward(encoder_[i], cache.encoder[i], d_enc[i], g);
    const Tensor d_prev = nn::avg_pool2_backward(d_in);
    for (std::size_t k = 0; k < d_prev.size(); ++k) d_enc[i - 1][k] += d_prev[k];
  }
  block_backward(encoder_[0], cache.encoder[0], d_enc[0], g);
}

LabelMap SegNetwork::predict_labels(const Tensor& x) const { return argmax_classes(forward(x).logits); }

LabelMap argmax_classes(const Tensor& logits) {
  if (logits.rank() != 4) throw ShapeError("argmax_classes expects (N, C, H, W), got " + shape_str(logits.shape()));
  const std::size_t N = logits.dim(0), C = logits.dim(1), M = logits.dim(2) * logits.dim(3);
  LabelMap out({N, logits.dim(2), logits.dim(3)});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < M; ++i) {
      std::size_t best = 0;
      double best_v = logits[n * C * M + i];
      for (std::size_t c = 1; c < C; ++c) {
        const double v = logits[(n * C + c) * M + i];
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      out[n * M + i] = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

}  // namespace m3hl
