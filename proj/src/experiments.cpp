#include "m3hl/experiments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "m3hl/config.hpp"

namespace m3hl {
namespace {

ClassMetrics average_final(const std::vector<RunRecord>& runs) {
  ClassMetrics m;
  if (runs.empty()) return m;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    const ClassMetrics& f = r.final_metrics().mean;
    m.dice += f.dice / n;
    m.jaccard += f.jaccard / n;
    m.hd95 += f.hd95 / n;
    m.asd += f.asd / n;
    m.undefined_surface += f.undefined_surface;
  }
  return m;
}

}  // namespace

const std::vector<AblationRow>& ablation_rows() {
  static const std::vector<AblationRow> rows = {
      {"sup", true, false, false},       {"sup+mix", true, true, false}, {"sup+hl", true, false, true},
      {"sup+mix+hl", true, true, true},  {"mix", false, true, false},    {"hl", false, false, true},
      {"mix+hl", false, true, true},
  };
  return rows;
}

const AblationRow& ablation_row(const std::string& name) {
  for (const auto& r : ablation_rows())
    if (r.name == name) return r;
  throw ConfigError("unknown ablation row '" + name + "'");
}

const AblationEntry& AblationTable::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.row.name == name) return e;
  throw ConfigError("ablation table has no row '" + name + "'");
}

AblationTable run_ablation(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                           const std::vector<std::string>& rows, const RunDoneFn& done) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  std::vector<AblationRow> selected;
  if (rows.empty()) {
    selected = ablation_rows();
  } else {
    for (const auto& name : rows) selected.push_back(ablation_row(name));
  }
  base.validate();
  const DatasetSplit data =
      make_split(base.n_labeled, base.n_unlabeled, base.n_val, base.data_seed, base.synth_options());

  AblationTable table;
  table.seeds = seeds;
  for (const auto& row : selected) {
    AblationEntry entry{row, {}, {}, true};
    for (std::uint64_t seed : seeds) {
      TrainConfig c = base;
      c.enable_sup = row.sup;
      c.enable_mix = row.mix;
      c.enable_hl = row.hl;
      c.seed = seed;
      entry.runs.push_back(run_experiment(c, data).record);
      entry.complete = entry.complete && entry.runs.back().completed();
      if (done) done(row.name + " seed " + std::to_string(seed), entry.runs.back());
    }
    entry.mean = average_final(entry.runs);
    table.entries.push_back(std::move(entry));
  }
  return table;
}

const SweepCell& SweepGrid::cell(std::size_t patch_index, std::size_t ratio_index) const {
  if (patch_index >= patch_sizes.size() || ratio_index >= ratios.size()) throw RangeError("sweep cell out of range");
  return cells.at(patch_index * ratios.size() + ratio_index);
}

const SweepCell& SweepGrid::best() const {
  const SweepCell* best = nullptr;
  for (const auto& c : cells)
    if (c.complete && (!best || c.dice > best->dice)) best = &c;
  if (!best) throw Error("no sweep cell completed");
  return *best;
}

double SweepGrid::ratio_column_mean(std::size_t ratio_index) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < patch_sizes.size(); ++p) {
    const SweepCell& c = cell(p, ratio_index);
    if (c.complete) {
      sum += c.dice;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

SweepGrid run_sweep(const TrainConfig& base, const std::vector<Shape>& patch_sizes, const std::vector<double>& ratios,
                    const std::vector<std::uint64_t>& seeds, const RunDoneFn& done) {
  if (patch_sizes.empty() || ratios.empty() || seeds.empty()) throw ConfigError("sweep needs patch sizes, ratios and seeds");
  base.validate();
  const DatasetSplit data =
      make_split(base.n_labeled, base.n_unlabeled, base.n_val, base.data_seed, base.synth_options());

  SweepGrid grid{patch_sizes, ratios, {}};
  for (const Shape& patch : patch_sizes) {
    for (double ratio : ratios) {
      SweepCell cell{patch, ratio, true, {}, 0.0, 0.0, {}};
      const std::string label = "patch " + format_patch(patch) + " ratio " + std::to_string(ratio);
      try {
        TrainConfig c = base;
        c.patch_size = patch;
        c.mask_ratio = ratio;
        c.validate();
        for (std::uint64_t seed : seeds) {
          c.seed = seed;
          cell.runs.push_back(run_experiment(c, data).record);
          const RunRecord& r = cell.runs.back();
          if (done) done(label + " seed " + std::to_string(seed), r);
          if (!r.completed()) {
            cell.complete = false;
            cell.reason = r.abort_reason;
            break;
          }
        }
      } catch (const Error& e) {
        cell.complete = false;
        cell.reason = e.what();
      }
      if (cell.complete) {
        const ClassMetrics m = average_final(cell.runs);
        cell.dice = m.dice;
        cell.asd = m.asd;
      }
      grid.cells.push_back(std::move(cell));
    }
  }
  return grid;
}

}  // namespace m3hl
