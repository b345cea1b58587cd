#include <cmath>
#include <functional>

#include "doctest.h"
#include "m3hl/losses.hpp"
#include "m3hl/rng.hpp"
#include "oracles.hpp"

using namespace m3hl;

namespace {

Tensor random_tensor(const Shape& s, SplitMix64& rng, double lo = -2, double hi = 2) {
  Tensor t(s);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

LabelMap random_labels(const Shape& s, std::size_t C, SplitMix64& rng) {
  LabelMap t(s);
  for (auto& v : t.values()) v = static_cast<std::uint8_t>(rng.bounded(C));
  return t;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

// d f / d x[i] by central differences.
double numeric(const std::function<double()>& f, Tensor& x, std::size_t i, double h = 1e-6) {
  const double orig = x[i];
  x[i] = orig + h;
  const double up = f();
  x[i] = orig - h;
  const double down = f();
  x[i] = orig;
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("mix, low, high and sup losses match scalar oracles on random instances") {
  SplitMix64 rng(1234);
  for (int t = 0; t < 25; ++t) {
    const int N = 1 + static_cast<int>(rng.bounded(3)), C = 2 + static_cast<int>(rng.bounded(3));
    const int H = 4, W = 4, HW = H * W;
    const Shape ls{static_cast<std::size_t>(N), static_cast<std::size_t>(C), 4, 4};
    const Shape ts{static_cast<std::size_t>(N), 4, 4};
    const Tensor la = random_tensor(ls, rng), lb = random_tensor(ls, rng);
    const LabelMap ta = random_labels(ts, C, rng), tb = random_labels(ts, C, rng);
    const Mask ma = generate_mask({4, 4}, {2, 2}, 0.5, rng.next());
    const Mask mb = generate_mask({4, 4}, {2, 2}, 0.5, rng.next());
    const double alpha = rng.uniform(0.1, 1.0);

    const double got = loss_mix({la, lb}, {ta, tb}, {ma, mb}, alpha).value;
    const double want = oracle::loss_mix(la.values(), lb.values(), ta.values(), tb.values(), ma.values.values(),
                                         mb.values.values(), alpha, N, C, HW);
    REQUIRE(rel(got, want) < 1e-6);
    REQUIRE(rel(loss_sup(la, ta).value, oracle::loss_sup(la.values(), ta.values(), N, C, HW)) < 1e-6);

    const Shape fs{static_cast<std::size_t>(N), 3, 2, 2};
    const Tensor fa = random_tensor(fs, rng), fb = random_tensor(fs, rng), ua = random_tensor(fs, rng),
                 ub = random_tensor(fs, rng);
    REQUIRE(rel(loss_low({fa, fb}, {ua, ub}).value,
                oracle::loss_low(fa.values(), fb.values(), ua.values(), ub.values())) < 1e-6);
    REQUIRE(rel(loss_high({fa, fb}, {ua, ub}).value,
                oracle::loss_high(fa.values(), fb.values(), ua.values(), ub.values(), N)) < 1e-6);
    (void)H;
    (void)W;
  }
}

TEST_CASE("loss_hl is low + high and loss_total adds lambda * hl") {
  SplitMix64 rng(5);
  const Shape s{2, 2, 2, 2};
  const Tensor a = random_tensor(s, rng), b = random_tensor(s, rng), c = random_tensor(s, rng),
               d = random_tensor(s, rng);
  const HlLossGrad h = loss_hl({a, b}, {c, d}, {a, b}, {c, d});
  CHECK(h.value == h.low + h.high);
  CHECK(h.low == loss_low({a, b}, {c, d}).value);
  CHECK(loss_total(2.0, 4.0, {0.5, 0.5}) == 4.0);
  CHECK(loss_total(2.0, 4.0, {0.0, 0.5}) == 2.0);
}

TEST_CASE("identical features give zero low and high losses") {
  SplitMix64 rng(6);
  const Tensor f = random_tensor({2, 3, 2, 2}, rng);
  CHECK(loss_low({f, f}, {f, f}).value == 0.0);
  CHECK(loss_high({f, f}, {f, f}).value == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("zero feature vectors are guarded by the cosine epsilon") {
  const Tensor z({1, 4}), o({1, 4}, 1.0);
  const PairLossGrad r = loss_high({z, z}, {o, o});
  CHECK(std::isfinite(r.value));
  CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("perfect confident predictions give near-zero ce_dice") {
  Tensor logits({1, 2, 1, 2});
  logits.at(0, 0, 0, 0) = 50;
  logits.at(0, 1, 0, 1) = 50;
  const LabelMap y({1, 1, 2}, std::vector<std::uint8_t>{0, 1});
  CHECK(loss_ce_dice(logits, y, Tensor({1, 2}, 1.0)) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("ce_dice validates weights, labels and shapes") {
  const Tensor logits({1, 2, 2, 2});
  const LabelMap y({1, 2, 2});
  CHECK_THROWS_AS(ce_dice(logits, y, Tensor({2, 2}, 0.0)), DegenerateWeightError);
  CHECK_THROWS_AS(ce_dice(logits, y, Tensor({2, 2}, -1.0)), RangeError);
  CHECK_THROWS_AS(ce_dice(logits, LabelMap({1, 2, 2}, 3), Tensor({2, 2}, 1.0)), RangeError);
  CHECK_THROWS_AS(ce_dice(logits, y, Tensor({3, 2}, 1.0)), ShapeError);
  CHECK_THROWS_AS(ce_dice(Tensor({2, 2}), y, Tensor({2, 2}, 1.0)), ShapeError);
}

TEST_CASE("mix weighting orientation: swapping equals passing the inverted mask") {
  SplitMix64 rng(7);
  const Tensor la = random_tensor({1, 3, 4, 4}, rng), lb = random_tensor({1, 3, 4, 4}, rng);
  const LabelMap ta = random_labels({1, 4, 4}, 3, rng), tb = random_labels({1, 4, 4}, 3, rng);
  const Mask m = generate_mask({4, 4}, {2, 2}, 0.5, 3);
  const double swapped = loss_mix({la, lb}, {ta, tb}, {m, m}, 0.3, true).value;
  const double inverted = loss_mix({la, lb}, {ta, tb}, {invert_mask(m), invert_mask(m)}, 0.3).value;
  CHECK(swapped == doctest::Approx(inverted));
  // alpha = 1 makes the mask irrelevant.
  CHECK(loss_mix({la, lb}, {ta, tb}, {m, m}, 1.0).value ==
        doctest::Approx(loss_ce_dice(la, ta, Tensor({4, 4}, 1.0)) + loss_ce_dice(lb, tb, Tensor({4, 4}, 1.0))));
}

TEST_CASE("loss gradients match finite differences") {
  SplitMix64 rng(99);
  Tensor la = random_tensor({2, 3, 4, 4}, rng), lb = random_tensor({2, 3, 4, 4}, rng);
  const LabelMap ta = random_labels({2, 4, 4}, 3, rng), tb = random_labels({2, 4, 4}, 3, rng);
  const Mask ma = generate_mask({4, 4}, {2, 2}, 0.5, 1), mb = generate_mask({4, 4}, {2, 2}, 0.5, 2);
  const PairLossGrad mix = loss_mix({la, lb}, {ta, tb}, {ma, mb}, 0.5);
  for (std::size_t i = 0; i < la.size(); i += 5) {
    REQUIRE(mix.grad_a[i] ==
            doctest::Approx(numeric([&] { return loss_mix({la, lb}, {ta, tb}, {ma, mb}, 0.5).value; }, la, i)).epsilon(1e-5));
    REQUIRE(mix.grad_b[i] ==
            doctest::Approx(numeric([&] { return loss_mix({la, lb}, {ta, tb}, {ma, mb}, 0.5).value; }, lb, i)).epsilon(1e-5));
  }
  const LossGrad sup = loss_sup(la, ta);
  for (std::size_t i = 0; i < la.size(); i += 3)
    REQUIRE(sup.grad[i] == doctest::Approx(numeric([&] { return loss_sup(la, ta).value; }, la, i)).epsilon(1e-5));

  Tensor fa = random_tensor({2, 2, 2, 2}, rng), fb = random_tensor({2, 2, 2, 2}, rng);
  const Tensor ua = random_tensor({2, 2, 2, 2}, rng), ub = random_tensor({2, 2, 2, 2}, rng);
  const PairLossGrad low = loss_low({fa, fb}, {ua, ub}), high = loss_high({fa, fb}, {ua, ub});
  for (std::size_t i = 0; i < fa.size(); ++i) {
    REQUIRE(low.grad_a[i] == doctest::Approx(numeric([&] { return loss_low({fa, fb}, {ua, ub}).value; }, fa, i)).epsilon(1e-5));
    REQUIRE(high.grad_a[i] == doctest::Approx(numeric([&] { return loss_high({fa, fb}, {ua, ub}).value; }, fa, i)).epsilon(1e-5));
    REQUIRE(high.grad_b[i] == doctest::Approx(numeric([&] { return loss_high({fa, fb}, {ua, ub}).value; }, fb, i)).epsilon(1e-5));
  }
}

TEST_CASE("property: ce_dice is invariant to adding a constant to all logits of a voxel") {
  SplitMix64 rng(21);
  for (int t = 0; t < 20; ++t) {
    Tensor l = random_tensor({1, 3, 3, 3}, rng);
    const LabelMap y = random_labels({1, 3, 3}, 3, rng);
    const Tensor w = random_tensor({3, 3}, rng, 0.1, 1.0);
    const double base = loss_ce_dice(l, y, w);
    for (std::size_t i = 0; i < 9; ++i) {
      const double shift = rng.uniform(-5, 5);
      for (std::size_t c = 0; c < 3; ++c) l[c * 9 + i] += shift;
    }
    REQUIRE(loss_ce_dice(l, y, w) == doctest::Approx(base).epsilon(1e-12));
  }
}
