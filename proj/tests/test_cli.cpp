#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "m3hl/container.hpp"
#include "m3hl/report.hpp"

using namespace m3hl;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "m3hl");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kTiny = {"--image-size", "16",      "--depth",          "2", "--base-channels", "4",
                                        "--batch-labeled", "2",    "--batch-unlabeled", "2", "--patch-size",   "4",
                                        "--n-labeled",  "2",       "--n-unlabeled",    "4", "--n-val",         "2"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

std::string strip_wall_clock(const std::string& text) {
  return std::regex_replace(text, std::regex(".*wall_clock_seconds.*\n"), "");
}

struct OutputRoot {
  fs::path root = fs::temp_directory_path() / "m3hl_cli_test";
  OutputRoot() {
    fs::remove_all(root);
    setenv(cli::kOutputRootEnv, root.c_str(), 1);
  }
  ~OutputRoot() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("gen-data with defaults writes an 8/72/20 split and refuses to overwrite without --force") {
  OutputRoot env;
  Result r = call({"gen-data", "--out", "data"});
  REQUIRE(r.code == 0);
  const auto manifest = container::read_key_values(env.root / "data" / "manifest.txt");
  CHECK(manifest.at("labeled") == "8");
  CHECK(manifest.at("unlabeled") == "72");
  CHECK(manifest.at("val") == "20");
  CHECK(manifest.at("size") == "64");

  r = call({"gen-data", "--out", "data"});
  CHECK(r.code != 0);
  CHECK(r.err.find("--force") != std::string::npos);
  CHECK(call({"gen-data", "--out", "data", "--force"}).code == 0);
}

TEST_CASE("gen-data seeds 1 and 2 produce different sample bytes") {
  OutputRoot env;
  REQUIRE(call(with_tiny({"gen-data", "--out", "s1", "--seed", "1"})).code == 0);
  REQUIRE(call(with_tiny({"gen-data", "--out", "s2", "--seed", "2"})).code == 0);
  REQUIRE(call(with_tiny({"gen-data", "--out", "s1b", "--seed", "1"})).code == 0);
  for (const char* part : {"labeled", "unlabeled", "val"}) {
    const fs::path rel = fs::path(part) / "sample_000000.image.bin";
    CHECK(read_text_file(env.root / "s1" / rel) != read_text_file(env.root / "s2" / rel));
    CHECK(read_text_file(env.root / "s1" / rel) == read_text_file(env.root / "s1b" / rel));
  }
}

TEST_CASE("train with --iterations 0 writes a baseline-only record") {
  OutputRoot env;
  const Result r = call(with_tiny({"train", "--iterations", "0", "--out", "t0"}));
  REQUIRE(r.code == 0);
  const std::string j = read_text_file(env.root / "t0" / "record.json");
  validate_run_record_json(j);
  CHECK(j.find("\"step\": []") != std::string::npos);
  CHECK(fs::exists(env.root / "t0" / "checkpoint" / "checkpoint.txt"));
}

TEST_CASE("config file overrides defaults and flags override the file") {
  OutputRoot env;
  const fs::path file = env.root / "cfg.txt";
  write_text_file(file, "# test\niterations = 2\nlr = 0.5\nmask_ratio = 0.25\n");
  const Result r = call(with_tiny({"train", "--config", file.string(), "--lr", "0.02", "--out", "t"}));
  REQUIRE(r.code == 0);
  const auto cfg = container::read_key_values(env.root / "t" / "config.txt");
  CHECK(cfg.at("iterations") == "2");
  CHECK(cfg.at("mask_ratio") == "0.25");
  CHECK(cfg.at("lr") == "0.02");
  CHECK(cfg.at("alpha") == "0.5");
}

TEST_CASE("default-toggle training record has all loss-component series") {
  OutputRoot env;
  REQUIRE(call(with_tiny({"train", "--iterations", "2", "--out", "t"})).code == 0);
  const std::string j = read_text_file(env.root / "t" / "record.json");
  validate_run_record_json(j);
  for (const char* k : {"\"mix\": [", "\"low\": [", "\"high\": [", "\"total\": ["}) CHECK(j.find(k) != std::string::npos);
}

TEST_CASE("reruns with --force reproduce byte-identical reports apart from wall clock") {
  OutputRoot env;
  REQUIRE(call(with_tiny({"train", "--iterations", "2", "--out", "t"})).code == 0);
  const std::string first = read_text_file(env.root / "t" / "record.json");
  REQUIRE(call(with_tiny({"train", "--iterations", "2", "--out", "t", "--force"})).code == 0);
  CHECK(strip_wall_clock(first) == strip_wall_clock(read_text_file(env.root / "t" / "record.json")));

  const auto sweep = with_tiny({"sweep", "--iterations", "1", "--patch-sizes", "4,8", "--ratios", "0.5", "--out", "s"});
  REQUIRE(call(sweep).code == 0);
  const std::string csv = read_text_file(env.root / "s" / "grid.csv");
  auto again = sweep;
  again.push_back("--force");
  REQUIRE(call(again).code == 0);
  CHECK(csv == read_text_file(env.root / "s" / "grid.csv"));
}

TEST_CASE("ablate and sweep emit schema-valid files") {
  OutputRoot env;
  REQUIRE(call(with_tiny({"ablate", "--iterations", "1", "--rows", "sup,mix+hl", "--seeds", "0,1", "--out", "a"})).code == 0);
  validate_ablation_json(read_text_file(env.root / "a" / "ablation.json"));
  CHECK(read_text_file(env.root / "a" / "ablation.txt").find("mix+hl") != std::string::npos);

  const Result s = call(with_tiny({"sweep", "--iterations", "1", "--patch-sizes", "4,32", "--ratios", "0.25,0.5", "--out", "s"}));
  REQUIRE(s.code == 0);
  const std::string csv = read_text_file(env.root / "s" / "grid.csv");
  validate_sweep_csv(csv);
  CHECK(csv.find("incomplete") != std::string::npos);
  CHECK(s.out.find("best:") != std::string::npos);
  CHECK(read_text_file(env.root / "s" / "summary.json").find("\"best\"") != std::string::npos);
}

TEST_CASE("eval reproduces the final metrics of a trained checkpoint") {
  OutputRoot env;
  REQUIRE(call(with_tiny({"train", "--iterations", "2", "--out", "t"})).code == 0);
  const Result e = call(with_tiny({"eval", "--checkpoint", (env.root / "t" / "checkpoint").string(), "--out", "e"}));
  REQUIRE(e.code == 0);
  CHECK(fs::exists(env.root / "e" / "metrics.json"));
  const auto record = nlohmann::json::parse(read_text_file(env.root / "t" / "record.json"));
  const auto metrics = nlohmann::json::parse(read_text_file(env.root / "e" / "metrics.json"));
  CHECK(metrics["mean"]["dice"].get<double>() == record["final"]["dice"].get<double>());
  CHECK(metrics["mean"]["asd"].get<double>() == record["final"]["asd"].get<double>());
}

TEST_CASE("bad input is reported, not crashed on") {
  OutputRoot env;
  CHECK(call({"train", "--mask-ratio", "2"}).code != 0);
  CHECK(call({"train", "--lr", "abc"}).code != 0);
  CHECK(call({"bogus"}).code != 0);
  CHECK(call({}).code != 0);
  CHECK(call(with_tiny({"ablate", "--rows", "nope", "--out", "x"})).code != 0);
}
