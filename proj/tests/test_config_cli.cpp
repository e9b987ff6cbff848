#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "navstream/config.hpp"
#include "navstream/runner.hpp"

using namespace navstream;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("navstream_test_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

RunConfig small_config(const std::string& tag) {
  RunConfig cfg;
  cfg.episodes = 2;
  cfg.world_size = 14;
  cfg.max_steps = 80;
  cfg.patch_grid = 6;
  cfg.out_dir = temp_dir(tag);
  return cfg;
}

}  // namespace

TEST_CASE("config round-trips through its text form") {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.scheme = ActionScheme::NaturalPhrase;
  cfg.policy = Policy::Decoder;
  cfg.prune_theta = 0.25;
  cfg.out_dir = "elsewhere";

  std::string text = serialize_config(cfg);
  auto path = std::filesystem::temp_directory_path() / "navstream_cfg_roundtrip.txt";
  std::ofstream(path) << text;
  RunConfig back = load_config_file(path.string());
  CHECK(serialize_config(back) == text);
}

TEST_CASE("config rejects unknown keys and bad ranges") {
  RunConfig cfg;
  CHECK_THROWS_AS(apply_config_entry(cfg, "nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "prune_theta", "bananas"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "policy", "oracle"), ConfigError);

  cfg.prune_theta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.prune_theta = 0.1;
  cfg.memory_frames = 99;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config hash ignores output location but not semantics") {
  RunConfig a;
  RunConfig b = a;
  b.out_dir = "somewhere_else";
  b.threads = 8;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = a.seed + 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("cmd_run is deterministic byte for byte") {
  RunConfig cfg1 = small_config("det1");
  RunConfig cfg2 = small_config("det2");
  REQUIRE(cmd_run(cfg1) == 0);
  REQUIRE(cmd_run(cfg2) == 0);
  CHECK(slurp(cfg1.episodes_path()) == slurp(cfg2.episodes_path()));
  CHECK(slurp(cfg1.metrics_path()) == slurp(cfg2.metrics_path()));
}

TEST_CASE("expert trajectories ignore the pruning switch") {
  RunConfig on = small_config("prune_on");
  RunConfig off = small_config("prune_off");
  off.pruning = false;
  REQUIRE(cmd_run(on) == 0);
  REQUIRE(cmd_run(off) == 0);

  auto actions_only = [](const std::string& text) {
    std::string out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      auto at = line.find("\"actions\"");
      if (at != std::string::npos) out += line.substr(at, line.find(']', at) - at) + "\n";
    }
    return out;
  };
  CHECK(actions_only(slurp(on.episodes_path())) == actions_only(slurp(off.episodes_path())));
  CHECK(slurp(on.episodes_path()) != slurp(off.episodes_path()));  // prune records differ
}

TEST_CASE("run outputs embed the config hash and seed") {
  RunConfig cfg = small_config("embed");
  REQUIRE(cmd_run(cfg) == 0);
  std::string jsonl = slurp(cfg.episodes_path());
  CHECK(jsonl.find("\"config_hash\":\"" + config_hash(cfg) + "\"") != std::string::npos);
  CHECK(jsonl.find("\"seed\":" + std::to_string(cfg.seed)) != std::string::npos);
  std::string metrics = slurp(cfg.metrics_path());
  CHECK(metrics.rfind("# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed), 0) == 0);
}

TEST_CASE("thread pool does not change the outputs") {
  RunConfig serial = small_config("serial");
  RunConfig parallel = small_config("parallel");
  parallel.threads = 4;
  REQUIRE(cmd_run(serial) == 0);
  REQUIRE(cmd_run(parallel) == 0);
  CHECK(slurp(serial.episodes_path()) == slurp(parallel.episodes_path()));
}

TEST_CASE("bench command writes one row per turn and mode") {
  RunConfig cfg = small_config("bench");
  cfg.bench_sessions = 2;
  cfg.window_size = 3;
  cfg.memory_frames = 3;
  REQUIRE(cmd_bench_latency(cfg) == 0);
  std::string text = slurp(cfg.bench_path());
  int rows = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) rows += !line.empty() && line[0] != '#' && line.find("turn,") != 0;
  CHECK(rows == 3 * cfg.bench_sessions * cfg.window_size);
  CHECK(text.find("full_turns") != std::string::npos);
  CHECK(text.find("sliding_window") != std::string::npos);
  CHECK(text.find("single_turn") != std::string::npos);
}

TEST_CASE("prune report ratios stay in range and vanish when pruning is off") {
  RunConfig cfg = small_config("prune_rep");
  cfg.episodes = 1;
  REQUIRE(cmd_prune_report(cfg) == 0);
  {
    std::istringstream in(slurp(cfg.prune_report_path()));
    std::string line;
    std::getline(in, line);  // preamble
    std::getline(in, line);  // header
    CHECK(line == "episode,block,t,valid_tokens,retained_tokens,frame_dropped_flag,cumulative_ratio");
    while (std::getline(in, line)) {
      double ratio = std::stod(line.substr(line.rfind(',') + 1));
      CHECK(ratio >= 0.0);
      CHECK(ratio <= 1.0);
    }
  }

  RunConfig off = small_config("prune_rep_off");
  off.episodes = 1;
  off.pruning = false;
  REQUIRE(cmd_prune_report(off) == 0);
  std::istringstream in(slurp(off.prune_report_path()));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  while (std::getline(in, line)) {
    double ratio = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(ratio == 0.0);
  }
}
