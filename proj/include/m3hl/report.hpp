#pragma once

#include <filesystem>
#include <string>

#include "m3hl/experiments.hpp"
#include "m3hl/trainer.hpp"

// Machine-readable reports. JSON documents carry a "format" tag:
//
//   m3hl-run/1       config (flat key -> text), losses {step, mix, low, high,
//                    sup, total: arrays}, evals [{step, mean, per_class}],
//                    final, status, abort_reason, wall_clock_seconds
//   m3hl-ablation/1  seeds, rows [{name, sup, mix, hl, complete, mean, runs}]
//   m3hl-sweep/1     patch_sizes, ratios, cells [...], best, ratio_column_means
//
// Metric objects are {dice, jaccard, hd95, asd, undefined_surface}. The sweep
// grid CSV has the header `patch_size,ratio,dice,asd,status`.
namespace m3hl {

std::string run_record_json(const RunRecord& record, bool include_wall_clock = true);
std::string metrics_json(const MetricsReport& report);
std::string ablation_json(const AblationTable& table, bool include_wall_clock = true);
/// Fixed-width text table: one line per row with Dice, Jaccard, ASD, 95HD.
std::string ablation_text(const AblationTable& table);
std::string sweep_csv(const SweepGrid& grid);
std::string sweep_summary_json(const SweepGrid& grid, bool include_wall_clock = true);

/// Throw Error describing the first schema violation.
void validate_run_record_json(const std::string& text);
void validate_ablation_json(const std::string& text);
void validate_sweep_csv(const std::string& text);

void write_text_file(const std::filesystem::path& file, const std::string& text);
std::string read_text_file(const std::filesystem::path& file);

}  // namespace m3hl
