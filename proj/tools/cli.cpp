#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>

#include "m3hl/checkpoint.hpp"
#include "m3hl/config.hpp"
#include "m3hl/container.hpp"
#include "m3hl/experiments.hpp"
#include "m3hl/kernels.hpp"
#include "m3hl/report.hpp"

namespace m3hl::cli {
namespace fs = std::filesystem;

namespace {

// Options every subcommand shares: the TrainConfig flags and --config.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "flat key = value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
      std::string names = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names += ",--" + dashed;
      options[key] = app->add_option(names, values[key], "TrainConfig." + key)->group("Training configuration");
    }
  }

  // defaults < file < flags
  TrainConfig resolve() const {
    TrainConfig c;
    if (!config_file.empty()) apply_settings(c, container::read_key_values(config_file));
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(c, key, values.at(key));
    c.validate();
    return c;
  }

  bool given(const std::string& key) const { return options.at(key)->count() > 0; }
};

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path resolve_out(const std::string& out, const std::string& fallback) {
  const fs::path p = out.empty() ? fs::path(fallback) : fs::path(out);
  return p.is_absolute() ? p : output_root() / p;
}

// Refuses to reuse a non-empty directory unless forced; forced reuse starts clean.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw IoError(dir.string() + " already exists and is not empty (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

DatasetSplit dataset_for(const TrainConfig& c, const std::string& data_dir) {
  if (data_dir.empty()) return make_split(c.n_labeled, c.n_unlabeled, c.n_val, c.data_seed, c.synth_options());
  return load_split(data_dir);
}

ProgressFn eval_printer(std::ostream& err, const std::string& label) {
  return [&err, label](const RunRecord& rec, std::size_t step) {
    if (rec.evals.empty() || rec.evals.back().step != step) return;
    const ClassMetrics& m = rec.evals.back().metrics.mean;
    err << label << "step " << step << " dice " << std::fixed << std::setprecision(4) << m.dice << " asd " << m.asd
        << " hd95 " << m.hd95 << std::defaultfloat << "\n";
  };
}

RunDoneFn run_printer(std::ostream& err) {
  return [&err](const std::string& label, const RunRecord& r) {
    err << label << ": " << r.status << " dice " << std::fixed << std::setprecision(4) << r.final_metrics().mean.dice
        << " (" << std::setprecision(1) << r.wall_clock_seconds << " s)" << std::defaultfloat << "\n";
  };
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised segmentation with mask mixing on synthetic data", "m3hl"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for the compute kernels (0 = runtime default)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a labeled/unlabeled/val synthetic split on disk");
  ConfigFlags gen_cfg;
  gen_cfg.attach(gen);
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--out", gen_out, "dataset directory (relative paths resolve against $M3HL_OUTPUT_ROOT)");
  gen->add_flag("--force", gen_force, "overwrite a non-empty directory");

  // train
  auto* train = app.add_subcommand("train", "train one configuration and write its run record");
  ConfigFlags train_cfg;
  train_cfg.attach(train);
  std::string train_out, train_data;
  bool train_force = false;
  train->add_option("--out", train_out, "run directory");
  train->add_option("--data", train_data, "dataset directory from gen-data (default: generate from the config)");
  train->add_flag("--force", train_force, "overwrite a non-empty directory");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run the seven loss-toggle rows and tabulate final metrics");
  ConfigFlags ablate_cfg;
  ablate_cfg.attach(ablate);
  std::string ablate_out, ablate_seeds = "0", ablate_rows;
  bool ablate_force = false;
  ablate->add_option("--out", ablate_out, "output directory");
  ablate->add_option("--seeds", ablate_seeds, "comma-separated training seeds averaged per row")->capture_default_str();
  ablate->add_option("--rows", ablate_rows, "comma-separated subset of rows (default: all seven)");
  ablate->add_flag("--force", ablate_force, "overwrite a non-empty directory");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid over mask patch sizes and mask ratios");
  ConfigFlags sweep_cfg;
  sweep_cfg.attach(sweep);
  std::string sweep_out, sweep_patches = "8,16,32", sweep_ratios = "0.25,0.5,0.75", sweep_seeds = "0";
  bool sweep_force = false;
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--patch-sizes", sweep_patches, "comma-separated patch sizes (N or NxM)")->capture_default_str();
  sweep->add_option("--ratios", sweep_ratios, "comma-separated mask ratios")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "comma-separated training seeds averaged per cell")->capture_default_str();
  sweep->add_flag("--force", sweep_force, "overwrite a non-empty directory");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint on a validation split");
  ConfigFlags eval_cfg;
  eval_cfg.attach(eval);
  std::string eval_ckpt, eval_data, eval_out;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory written by train")->required();
  eval->add_option("--data", eval_data, "dataset directory (default: generate from the config)");
  eval->add_option("--out", eval_out, "write metrics.json here instead of only printing");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (threads > 0) kernels::set_threads(threads);

    if (*gen) {
      TrainConfig c = gen_cfg.resolve();
      // For gen-data, --seed names the dataset base seed.
      if (gen_cfg.given("seed") && !gen_cfg.given("data_seed")) c.data_seed = c.seed;
      const fs::path dir = resolve_out(gen_out, "data");
      const DatasetSplit split = make_split(c.n_labeled, c.n_unlabeled, c.n_val, c.data_seed, c.synth_options());
      save_split(split, dir, gen_force);
      out << "wrote " << split.labeled.size() << "/" << split.unlabeled.size() << "/" << split.val.size()
          << " samples to " << dir.string() << "\n";
      return 0;
    }

    if (*train) {
      const TrainConfig c = train_cfg.resolve();
      const fs::path dir = resolve_out(train_out, "train");
      prepare_dir(dir, train_force);
      const RunResult r = run_experiment(c, dataset_for(c, train_data), eval_printer(err, ""));
      write_text_file(dir / "config.txt", format_config(c));
      write_text_file(dir / "record.json", run_record_json(r.record));
      save_checkpoint(dir / "checkpoint", r.state.nets.student());
      const ClassMetrics& m = r.record.final_metrics().mean;
      out << r.record.status << ": dice " << m.dice << " jaccard " << m.jaccard << " asd " << m.asd << " hd95 "
          << m.hd95 << "\nwrote " << (dir / "record.json").string() << "\n";
      return r.record.completed() ? 0 : 3;
    }

    if (*ablate) {
      const TrainConfig c = ablate_cfg.resolve();
      const fs::path dir = resolve_out(ablate_out, "ablate");
      prepare_dir(dir, ablate_force);
      const AblationTable t = run_ablation(c, parse_seeds(ablate_seeds), split_list(ablate_rows), run_printer(err));
      write_text_file(dir / "config.txt", format_config(c));
      write_text_file(dir / "ablation.json", ablation_json(t));
      write_text_file(dir / "ablation.txt", ablation_text(t));
      out << ablation_text(t) << "wrote " << (dir / "ablation.json").string() << "\n";
      return 0;
    }

    if (*sweep) {
      const TrainConfig c = sweep_cfg.resolve();
      std::vector<Shape> patches;
      for (const auto& p : split_list(sweep_patches)) {
        TrainConfig probe;
        apply_setting(probe, "patch_size", p);
        patches.push_back(probe.patch_size);
      }
      std::vector<double> ratios;
      for (const auto& r : split_list(sweep_ratios)) {
        TrainConfig probe;
        apply_setting(probe, "mask_ratio", r);
        ratios.push_back(probe.mask_ratio);
      }
      const fs::path dir = resolve_out(sweep_out, "sweep");
      prepare_dir(dir, sweep_force);
      const SweepGrid g = run_sweep(c, patches, ratios, parse_seeds(sweep_seeds), run_printer(err));
      write_text_file(dir / "config.txt", format_config(c));
      write_text_file(dir / "grid.csv", sweep_csv(g));
      write_text_file(dir / "summary.json", sweep_summary_json(g));
      out << sweep_csv(g);
      bool any = false;
      for (const auto& cell : g.cells) any = any || cell.complete;
      if (any) {
        const SweepCell& b = g.best();
        out << "best: patch " << format_patch(b.patch_size) << " ratio " << b.ratio << " dice " << b.dice << "\n";
      }
      out << "wrote " << (dir / "grid.csv").string() << "\n";
      return 0;
    }

    if (*eval) {
      const TrainConfig c = eval_cfg.resolve();
      const SegNetwork net = load_checkpoint(eval_ckpt);
      const DatasetSplit data = dataset_for(c, eval_data);
      const std::string report = metrics_json(evaluate(net, data.val, net.config().num_classes));
      if (!eval_out.empty()) {
        const fs::path dir = resolve_out(eval_out, "eval");
        fs::create_directories(dir);
        write_text_file(dir / "metrics.json", report);
      }
      out << report;
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace m3hl::cli
