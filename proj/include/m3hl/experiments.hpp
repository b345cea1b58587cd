#pragma once

#include <functional>
#include <string>
#include <vector>

#include "m3hl/trainer.hpp"

namespace m3hl {

/// One loss-toggle combination of the ablation study.
struct AblationRow {
  std::string name;
  bool sup = false;
  bool mix = false;
  bool hl = false;
};

/// The seven rows in table order: sup, sup+mix, sup+hl, sup+mix+hl, mix, hl, mix+hl.
const std::vector<AblationRow>& ablation_rows();
const AblationRow& ablation_row(const std::string& name);

struct AblationEntry {
  AblationRow row;
  std::vector<RunRecord> runs;  // one per training seed
  ClassMetrics mean;            // final foreground-mean metrics averaged over runs
  bool complete = true;         // false if any run aborted
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationEntry> entries;

  const AblationEntry& entry(const std::string& name) const;
};

/// Called after each finished run with (row, seed index).
using RunDoneFn = std::function<void(const std::string& label, const RunRecord&)>;

/// Runs the selected rows (all seven when `rows` is empty) for every training
/// seed. All rows share one dataset built from base.data_seed; run k uses
/// config.seed = seeds[k].
AblationTable run_ablation(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                           const std::vector<std::string>& rows = {}, const RunDoneFn& done = {});

struct SweepCell {
  Shape patch_size;
  double ratio = 0.0;
  bool complete = false;
  std::string reason;  // why the cell is incomplete
  double dice = 0.0;   // averaged over seeds
  double asd = 0.0;
  std::vector<RunRecord> runs;
};

/// Rectangular patch-size x ratio grid; cells are stored patch-major.
struct SweepGrid {
  std::vector<Shape> patch_sizes;
  std::vector<double> ratios;
  std::vector<SweepCell> cells;

  const SweepCell& cell(std::size_t patch_index, std::size_t ratio_index) const;
  /// Completed cell with the highest Dice; throws Error if none completed.
  const SweepCell& best() const;
  /// Mean Dice of the completed cells in one ratio column (NaN if none).
  double ratio_column_mean(std::size_t ratio_index) const;
};

/// Cartesian product of patch sizes and ratios. A cell whose runs fail
/// (invalid geometry, aborted training) is marked incomplete and the sweep
/// carries on.
SweepGrid run_sweep(const TrainConfig& base, const std::vector<Shape>& patch_sizes, const std::vector<double>& ratios,
                    const std::vector<std::uint64_t>& seeds, const RunDoneFn& done = {});

}  // namespace m3hl
