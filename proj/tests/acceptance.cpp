// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 3 5      run the listed criteria only
//
// The directional training criteria (6-8) use the desk profile below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "m3hl/experiments.hpp"
#include "m3hl/losses.hpp"
#include "m3hl/maskgen.hpp"
#include "m3hl/metrics.hpp"
#include "m3hl/mixer.hpp"
#include "m3hl/report.hpp"
#include "m3hl/rng.hpp"
#include "metric_corpus.hpp"
#include "oracles.hpp"

using namespace m3hl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Reduced geometry that keeps the 10%-labeled regime and the 4x4 patch grid
// (32 / 8 = 64 / 16) while fitting the CPU budget.
TrainConfig desk_profile() {
  TrainConfig c;
  c.image_size = 32;
  c.depth = 3;
  c.base_channels = 8;
  c.batch_labeled = c.batch_unlabeled = 4;
  c.patch_size = {8, 8};
  c.lr = 0.01;
  c.iterations = 3000;
  c.eval_every = 1000;
  return c;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// 1. Mask exactness.
Outcome mask_exactness() {
  const auto t0 = Clock::now();
  SplitMix64 rng(2718);
  std::size_t wrong = 0, configs = 0;
  const auto check = [&](const Shape& shape, const Shape& patch, double ratio, std::uint64_t seed) {
    const Mask m = generate_mask(shape, patch, ratio, seed);
    const auto want = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(m.patch_count())));
    std::size_t ones = 0;
    for (auto v : m.values.values()) ones += v;
    const std::size_t per_patch = shape_size(patch);
    wrong += m.zero_patch_count() != want || ones != (m.patch_count() - want) * per_patch;
    ++configs;
  };
  check({256, 256}, {64, 64}, 0.5, 0);
  const bool case2d = generate_mask({256, 256}, {64, 64}, 0.5, 0).zero_patch_count() == 8;
  check({112, 112, 80}, {28, 28, 20}, 0.5, 0);
  const bool case3d = generate_mask({112, 112, 80}, {28, 28, 20}, 0.5, 0).zero_patch_count() == 32;
  while (configs < 1000) {
    const std::size_t rank = 2 + rng.bounded(2);
    Shape patch(rank), shape(rank);
    for (std::size_t a = 0; a < rank; ++a) {
      patch[a] = 1 + rng.bounded(rank == 2 ? 16 : 6);
      shape[a] = patch[a] * (1 + rng.bounded(rank == 2 ? 12 : 5));
    }
    check(shape, patch, rng.uniform(), rng.next());
  }
  const double secs = seconds_since(t0);
  return {wrong == 0 && case2d && case3d && secs < 10.0,
          std::to_string(configs) + " configs, " + std::to_string(wrong) + " mismatches, 2D 8/16 " +
              (case2d ? "ok" : "WRONG") + ", 3D 32/64 " + (case3d ? "ok" : "WRONG") + ", " + fmt(secs, 2) + " s"};
}

// 2. Mix algebra.
Outcome mix_algebra() {
  SplitMix64 rng(161803);
  std::size_t exact = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t p = 1 + rng.bounded(4), g = 1 + rng.bounded(6);
    const Shape spatial{p * g, p * (1 + rng.bounded(6))};
    Tensor xu({2, 1, spatial[0], spatial[1]}), xl(xu.shape());
    for (auto& v : xu.values()) v = rng.uniform(-10, 10);
    for (auto& v : xl.values()) v = rng.uniform(-10, 10);
    const Mask m = generate_mask(spatial, {p, p}, rng.uniform(), rng.next());
    const Tensor a = mix_images(xu, xl, m), b = mix_images(xu, xl, invert_mask(m));
    bool ok = true;
    for (std::size_t i = 0; i < a.size(); ++i) ok = ok && (a[i] + b[i] == xu[i] + xl[i]);
    exact += ok;
  }
  return {exact == 100, std::to_string(exact) + "/100 cases exact"};
}

// 3. Loss oracles.
Outcome loss_oracles() {
  SplitMix64 rng(314159);
  double worst = 0.0;
  const int instances = 25;
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  for (int t = 0; t < instances; ++t) {
    const std::size_t N = 1 + rng.bounded(3), C = 2 + rng.bounded(3), H = 4, W = 6;
    Tensor la({N, C, H, W}), lb(la.shape());
    for (auto& v : la.values()) v = rng.uniform(-3, 3);
    for (auto& v : lb.values()) v = rng.uniform(-3, 3);
    LabelMap ta({N, H, W}), tb(ta.shape());
    for (auto& v : ta.values()) v = static_cast<std::uint8_t>(rng.bounded(C));
    for (auto& v : tb.values()) v = static_cast<std::uint8_t>(rng.bounded(C));
    const Mask ma = generate_mask({H, W}, {2, 3}, 0.5, rng.next()), mb = generate_mask({H, W}, {2, 3}, 0.5, rng.next());
    const double alpha = rng.uniform(0.05, 1.0);
    const int n = static_cast<int>(N), c = static_cast<int>(C), hw = static_cast<int>(H * W);
    worst = std::max(worst, rel(loss_mix({la, lb}, {ta, tb}, {ma, mb}, alpha).value,
                                oracle::loss_mix(la.values(), lb.values(), ta.values(), tb.values(), ma.values.values(),
                                                 mb.values.values(), alpha, n, c, hw)));
    worst = std::max(worst, rel(loss_sup(la, ta).value, oracle::loss_sup(la.values(), ta.values(), n, c, hw)));

    const Shape fs{N, 1 + rng.bounded(4), 3, 3};
    Tensor f[4];
    for (auto& x : f) {
      x = Tensor(fs);
      for (auto& v : x.values()) v = rng.uniform(-2, 2);
    }
    worst = std::max(worst, rel(loss_low({f[0], f[1]}, {f[2], f[3]}).value,
                                oracle::loss_low(f[0].values(), f[1].values(), f[2].values(), f[3].values())));
    worst = std::max(worst, rel(loss_high({f[0], f[1]}, {f[2], f[3]}).value,
                                oracle::loss_high(f[0].values(), f[1].values(), f[2].values(), f[3].values(), n)));
  }
  return {worst <= 1e-6, std::to_string(instances) + " instances x 4 losses, worst relative error " +
                             std::to_string(worst)};
}

// 4. Gradient check of the full objective.
Outcome gradient_check() {
  const gradcheck::Report r = gradcheck::run(60, 11);
  double worst = 0.0;
  std::set<std::string> tensors;
  for (const auto& p : r.probes) {
    worst = std::max(worst, p.rel_error);
    tensors.insert(p.param);
  }
  return {r.probes.size() >= 50 && worst <= 1e-3,
          std::to_string(r.probes.size()) + " probes over " + std::to_string(tensors.size()) +
              " parameter tensors, worst relative error " + std::to_string(worst) + " (" +
              std::to_string(r.discarded) + " kink-straddling draws discarded)"};
}

// 5. Metric oracles.
Outcome metric_oracles() {
  const auto cases = corpus::build();
  std::size_t matched = 0;
  for (const auto& c : cases) {
    const Shape s{static_cast<std::size_t>(c.h), static_cast<std::size_t>(c.w)};
    const LabelMap p(s, c.pred), g(s, c.gt);
    const oracle::Scores o = oracle::binary_scores(c.pred, c.gt, c.h, c.w);
    const OverlapScores ov = dice_jaccard(p, g);
    bool ok = ov.dice == o.dice && ov.jaccard == o.jaccard;
    const bool pe = std::none_of(c.pred.begin(), c.pred.end(), [](auto v) { return v != 0; });
    const bool ge = std::none_of(c.gt.begin(), c.gt.end(), [](auto v) { return v != 0; });
    try {
      const SurfaceScores ss = surface_distances(p, g);
      ok = ok && !pe && !ge && ss.hd95 == o.surface.hd95 && ss.asd == o.surface.asd;
    } catch (const UndefinedSurfaceError&) {
      ok = ok && (pe || ge);
    }
    matched += ok;
  }
  const auto sq = corpus::translated_square();
  const Shape ss{static_cast<std::size_t>(sq.h), static_cast<std::size_t>(sq.w)};
  const SurfaceScores t = surface_distances(LabelMap(ss, sq.pred), LabelMap(ss, sq.gt));
  const auto id = corpus::identical_mask();
  const Shape is{static_cast<std::size_t>(id.h), static_cast<std::size_t>(id.w)};
  const SurfaceScores i = surface_distances(LabelMap(is, id.pred), LabelMap(is, id.gt));
  const bool square_ok = t.hd95 == 1.0 && t.asd == 1.0;
  const bool identical_ok = i.hd95 == 0.0 && i.asd == 0.0;
  return {matched == cases.size() && square_ok && identical_ok,
          std::to_string(matched) + "/" + std::to_string(cases.size()) + " corpus cases match the oracle; " +
              "translated square hd95 " + fmt(t.hd95, 3) + " asd " + fmt(t.asd, 3) + " (stated: 1, 1); identical " +
              "mask hd95 " + fmt(i.hd95, 3) + " asd " + fmt(i.asd, 3)};
}

// Shared state between 6 and 7: the full-method run for the first seed.
struct DeskRuns {
  DatasetSplit data;
  AblationTable table;
  bool have_table = false;
};

DeskRuns& desk() {
  static DeskRuns d{[] {
    const TrainConfig c = desk_profile();
    return make_split(c.n_labeled, c.n_unlabeled, c.n_val, c.data_seed, c.synth_options());
  }(), {}, false};
  return d;
}

const std::vector<std::uint64_t> kSeeds = {0, 1, 2};

// 6. Determinism.
Outcome determinism() {
  TrainConfig c = desk_profile();
  c.seed = kSeeds[0];
  const auto t0 = Clock::now();
  const RunRecord a = run_experiment(c, desk().data).record;
  const RunRecord b = run_experiment(c, desk().data).record;
  const bool same = run_record_json(a, false) == run_record_json(b, false);
  return {same && a.completed(),
          std::string(same ? "identical" : "DIFFERENT") + " loss curves (" + std::to_string(a.losses.size()) +
              " steps) and final metrics (dice " + fmt(a.final_metrics().mean.dice) + "), " +
              fmt(seconds_since(t0), 1) + " s"};
}

// 7. Directional ablation ordering.
Outcome ablation_ordering() {
  const auto t0 = Clock::now();
  const TrainConfig c = desk_profile();
  const AblationTable t = run_ablation(c, kSeeds, {"sup", "mix", "mix+hl", "sup+mix+hl"},
                                       [](const std::string& label, const RunRecord& r) {
                                         std::cerr << "  [7] " << label << ": dice "
                                                   << fmt(r.final_metrics().mean.dice) << " ("
                                                   << fmt(r.wall_clock_seconds, 1) << " s)\n";
                                       });
  const double secs = seconds_since(t0);
  const double sup = 100 * t.entry("sup").mean.dice, mix = 100 * t.entry("mix").mean.dice;
  const double full = 100 * t.entry("mix+hl").mean.dice, with_sup = 100 * t.entry("sup+mix+hl").mean.dice;
  const bool a = mix - sup >= 3.0, b = full - mix >= 0.5, cc = full - with_sup >= -0.5;
  bool complete = true;
  for (const auto& e : t.entries) complete = complete && e.complete;
  std::cerr << ablation_text(t);
  return {a && b && cc && complete && secs <= 3600.0,
          "Dice over seeds {0,1,2}: sup " + fmt(sup, 2) + ", mix " + fmt(mix, 2) + ", mix+hl " + fmt(full, 2) +
              ", sup+mix+hl " + fmt(with_sup, 2) + "; (a) mix-sup " + fmt(mix - sup, 2) + (a ? " ok" : " FAIL") +
              ", (b) mix+hl-mix " + fmt(full - mix, 2) + (b ? " ok" : " FAIL") + ", (c) mix+hl-(sup+mix+hl) " +
              fmt(full - with_sup, 2) + (cc ? " ok" : " FAIL") + "; " + fmt(secs / 60, 1) + " min"};
}

// 8. Sweep protocol.
Outcome sweep_protocol() {
  const auto t0 = Clock::now();
  const TrainConfig c = desk_profile();
  // Patch sizes scaled with the image: grids of 8x8, 4x4 and 2x2 patches.
  const std::vector<Shape> patches{{4, 4}, {8, 8}, {16, 16}};
  const std::vector<double> ratios{0.25, 0.5, 0.75};
  const SweepGrid g = run_sweep(c, patches, ratios, {0}, [](const std::string& label, const RunRecord& r) {
    std::cerr << "  [8] " << label << ": dice " << fmt(r.final_metrics().mean.dice) << "\n";
  });
  const std::string csv = sweep_csv(g);
  bool csv_ok = true;
  try {
    validate_sweep_csv(csv);
  } catch (const Error&) {
    csv_ok = false;
  }
  std::size_t complete = 0;
  for (const auto& cell : g.cells) complete += cell.complete;
  std::vector<double> means;
  for (std::size_t r = 0; r < ratios.size(); ++r) means.push_back(g.ratio_column_mean(r));
  std::size_t rank = 1;
  for (std::size_t r = 0; r < ratios.size(); ++r) rank += means[r] > means[1];
  const std::size_t top_half = (ratios.size() + 1) / 2;
  std::cerr << csv;
  return {complete == g.cells.size() && csv_ok && rank <= top_half,
          std::to_string(complete) + "/9 cells complete, CSV " + (csv_ok ? "valid" : "INVALID") +
              "; ratio column means 0.25: " + fmt(means[0]) + ", 0.5: " + fmt(means[1]) + ", 0.75: " + fmt(means[2]) +
              "; ratio 0.5 ranks " + std::to_string(rank) + " of 3; " + fmt(seconds_since(t0) / 60, 1) + " min"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mask exactness", mask_exactness},   {"mix algebra", mix_algebra},       {"loss oracles", loss_oracles},
      {"gradient check", gradient_check},   {"metric oracles", metric_oracles}, {"determinism", determinism},
      {"ablation ordering", ablation_ordering}, {"sweep protocol", sweep_protocol},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << criteria[k].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
