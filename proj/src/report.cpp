#include "m3hl/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "m3hl/config.hpp"

namespace m3hl {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json metric_obj(const ClassMetrics& m) {
  return {{"dice", m.dice},
          {"jaccard", m.jaccard},
          {"hd95", m.hd95},
          {"asd", m.asd},
          {"undefined_surface", m.undefined_surface}};
}

ordered_json config_obj(const TrainConfig& c) {
  ordered_json o = ordered_json::object();
  for (const auto& key : config_keys()) o[key] = get_setting(c, key);
  return o;
}

ordered_json record_obj(const RunRecord& r, bool wall_clock) {
  ordered_json losses{{"step", json::array()}, {"mix", json::array()},  {"low", json::array()},
                      {"high", json::array()}, {"sup", json::array()}, {"total", json::array()}};
  for (const auto& l : r.losses) {
    losses["step"].push_back(l.step);
    losses["mix"].push_back(l.losses.mix);
    losses["low"].push_back(l.losses.low);
    losses["high"].push_back(l.losses.high);
    losses["sup"].push_back(l.losses.sup);
    losses["total"].push_back(l.losses.total);
  }
  ordered_json evals = json::array();
  for (const auto& e : r.evals) {
    ordered_json per_class = json::array();
    for (std::size_t c = 1; c < e.metrics.per_class.size(); ++c) per_class.push_back(metric_obj(e.metrics.per_class[c]));
    evals.push_back({{"step", e.step}, {"mean", metric_obj(e.metrics.mean)}, {"per_class", per_class}});
  }
  ordered_json o{{"format", "m3hl-run/1"},
                 {"status", r.status},
                 {"abort_reason", r.abort_reason},
                 {"config", config_obj(r.config)},
                 {"losses", losses},
                 {"evals", evals},
                 {"final", r.evals.empty() ? ordered_json(nullptr) : metric_obj(r.final_metrics().mean)}};
  if (wall_clock) o["wall_clock_seconds"] = r.wall_clock_seconds;
  return o;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("schema violation: " + what);
}

void require_metric(const json& m, const std::string& where) {
  require(m.is_object(), where + " is not an object");
  for (const char* k : {"dice", "jaccard", "hd95", "asd"}) {
    require(m.contains(k) && m[k].is_number(), where + "." + k + " missing or not a number");
  }
  require(m.contains("undefined_surface") && m["undefined_surface"].is_number_unsigned(),
          where + ".undefined_surface missing");
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("schema violation: not JSON: ") + e.what());
  }
}

void require_record(const json& j, const std::string& where) {
  require(j.is_object() && j.value("format", "") == "m3hl-run/1", where + ".format != m3hl-run/1");
  require(j.contains("status") && (j["status"] == "completed" || j["status"] == "aborted"), where + ".status");
  require(j.contains("config") && j["config"].is_object(), where + ".config");
  for (const auto& key : config_keys()) require(j["config"].contains(key), where + ".config." + key + " missing");
  require(j.contains("losses") && j["losses"].is_object(), where + ".losses");
  const auto& l = j["losses"];
  std::size_t n = 0;
  for (const char* k : {"step", "mix", "low", "high", "sup", "total"}) {
    require(l.contains(k) && l[k].is_array(), where + ".losses." + k + " missing");
    if (std::string(k) == "step") n = l[k].size();
    require(l[k].size() == n, where + ".losses." + k + " length differs from step");
  }
  require(j.contains("evals") && j["evals"].is_array() && !j["evals"].empty(), where + ".evals");
  for (const auto& e : j["evals"]) {
    require(e.contains("step") && e["step"].is_number_unsigned(), where + ".evals[].step");
    require_metric(e["mean"], where + ".evals[].mean");
    require(e.contains("per_class") && e["per_class"].is_array(), where + ".evals[].per_class");
  }
  require_metric(j["final"], where + ".final");
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string run_record_json(const RunRecord& record, bool include_wall_clock) {
  return record_obj(record, include_wall_clock).dump(2) + "\n";
}

std::string metrics_json(const MetricsReport& report) {
  ordered_json per_class = json::array();
  for (std::size_t c = 1; c < report.per_class.size(); ++c) per_class.push_back(metric_obj(report.per_class[c]));
  return ordered_json{{"n_cases", report.n_cases}, {"mean", metric_obj(report.mean)}, {"per_class", per_class}}.dump(2) +
         "\n";
}

std::string ablation_json(const AblationTable& table, bool include_wall_clock) {
  ordered_json rows = json::array();
  for (const auto& e : table.entries) {
    ordered_json runs = json::array();
    for (const auto& r : e.runs) runs.push_back(record_obj(r, include_wall_clock));
    rows.push_back({{"name", e.row.name},
                    {"sup", e.row.sup},
                    {"mix", e.row.mix},
                    {"hl", e.row.hl},
                    {"complete", e.complete},
                    {"mean", metric_obj(e.mean)},
                    {"runs", runs}});
  }
  return ordered_json{{"format", "m3hl-ablation/1"}, {"seeds", table.seeds}, {"rows", rows}}.dump(2) + "\n";
}

std::string ablation_text(const AblationTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "method" << std::right << std::setw(6) << "sup" << std::setw(6) << "mix"
     << std::setw(6) << "hl" << std::setw(10) << "dice" << std::setw(10) << "jaccard" << std::setw(10) << "asd"
     << std::setw(10) << "95hd" << "\n";
  for (const auto& e : table.entries) {
    const auto mark = [](bool b) { return b ? "x" : "-"; };
    os << std::left << std::setw(12) << e.row.name << std::right << std::setw(6) << mark(e.row.sup) << std::setw(6)
       << mark(e.row.mix) << std::setw(6) << mark(e.row.hl) << std::setw(10) << fixed(100 * e.mean.dice, 2)
       << std::setw(10) << fixed(100 * e.mean.jaccard, 2) << std::setw(10) << fixed(e.mean.asd, 3) << std::setw(10)
       << fixed(e.mean.hd95, 3) << (e.complete ? "" : "  (incomplete)") << "\n";
  }
  return os.str();
}

std::string sweep_csv(const SweepGrid& grid) {
  std::ostringstream os;
  os << "patch_size,ratio,dice,asd,status\n" << std::setprecision(17);
  for (const auto& c : grid.cells) {
    os << format_patch(c.patch_size) << "," << c.ratio << ",";
    if (c.complete) {
      os << c.dice << "," << c.asd << ",completed\n";
    } else {
      os << ",,incomplete\n";
    }
  }
  return os.str();
}

std::string sweep_summary_json(const SweepGrid& grid, bool include_wall_clock) {
  ordered_json patches = json::array(), cells = json::array(), columns = json::array();
  for (const auto& p : grid.patch_sizes) patches.push_back(format_patch(p));
  for (std::size_t r = 0; r < grid.ratios.size(); ++r) {
    const double m = grid.ratio_column_mean(r);
    columns.push_back(std::isnan(m) ? ordered_json(nullptr) : ordered_json(m));
  }
  for (const auto& c : grid.cells) {
    ordered_json cell{{"patch_size", format_patch(c.patch_size)}, {"ratio", c.ratio}, {"complete", c.complete}};
    if (c.complete) {
      cell["dice"] = c.dice;
      cell["asd"] = c.asd;
    } else {
      cell["reason"] = c.reason;
    }
    if (include_wall_clock) {
      double secs = 0.0;
      for (const auto& r : c.runs) secs += r.wall_clock_seconds;
      cell["wall_clock_seconds"] = secs;
    }
    cells.push_back(cell);
  }
  ordered_json best = nullptr;
  bool any = false;
  for (const auto& c : grid.cells) any = any || c.complete;
  if (any) {
    const SweepCell& b = grid.best();
    best = {{"patch_size", format_patch(b.patch_size)}, {"ratio", b.ratio}, {"dice", b.dice}, {"asd", b.asd}};
  }
  return ordered_json{{"format", "m3hl-sweep/1"},
                      {"patch_sizes", patches},
                      {"ratios", grid.ratios},
                      {"cells", cells},
                      {"best", best},
                      {"ratio_column_means", columns}}
             .dump(2) +
         "\n";
}

void validate_run_record_json(const std::string& text) { require_record(parse(text), "record"); }

void validate_ablation_json(const std::string& text) {
  const json j = parse(text);
  require(j.value("format", "") == "m3hl-ablation/1", "format != m3hl-ablation/1");
  require(j.contains("seeds") && j["seeds"].is_array(), "seeds");
  require(j.contains("rows") && j["rows"].is_array(), "rows");
  for (const auto& r : j["rows"]) {
    require(r.contains("name") && r["name"].is_string(), "rows[].name");
    for (const char* k : {"sup", "mix", "hl", "complete"}) require(r.contains(k) && r[k].is_boolean(), "rows[]." + std::string(k));
    require_metric(r["mean"], "rows[].mean");
    require(r.contains("runs") && r["runs"].size() == j["seeds"].size(), "rows[].runs count differs from seeds");
    for (const auto& run : r["runs"]) require_record(run, "rows[].runs[]");
  }
}

void validate_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == "patch_size,ratio,dice,asd,status", "csv header");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    require(f.size() == 5, "csv row " + std::to_string(rows) + " does not have 5 fields");
    TrainConfig probe;
    try {
      apply_setting(probe, "patch_size", f[0]);
      (void)std::stod(f[1]);
      if (f[4] == "completed") {
        (void)std::stod(f[2]);
        (void)std::stod(f[3]);
      } else {
        require(f[4] == "incomplete" && f[2].empty() && f[3].empty(), "csv row " + std::to_string(rows) + " status");
      }
    } catch (const std::logic_error&) {
      require(false, "csv row " + std::to_string(rows) + " has a malformed number");
    } catch (const ConfigError&) {
      require(false, "csv row " + std::to_string(rows) + " has a malformed patch size");
    }
  }
  require(rows > 0, "csv has no rows");
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace m3hl
