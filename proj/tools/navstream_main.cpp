// navstream CLI: run episodes, benchmark the latency accounting modes, and
// report voxel pruning statistics.
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "navstream/config.hpp"
#include "navstream/runner.hpp"

namespace {

using navstream::RunConfig;

void add_common_flags(CLI::App* cmd, std::string& config_file,
                      std::vector<std::pair<std::string, std::string>>& overrides) {
  cmd->add_option("--config", config_file, "key=value config file with defaults");
  auto track = [&overrides](const std::string& key) {
    return [&overrides, key](const std::string& value) { overrides.emplace_back(key, value); };
  };
  cmd->add_option_function<std::string>("--seed", track("seed"), "master seed");
  cmd->add_option_function<std::string>("--world-size", track("world_size"), "grid side in cells");
  cmd->add_option_function<std::string>("--episodes", track("episodes"), "episode count");
  cmd->add_option_function<std::string>("--window-size", track("window_size"), "dialogue turns per session (N)");
  cmd->add_option_function<std::string>("--memory-frames", track("memory_frames"), "frames per memory block");
  cmd->add_option_function<std::string>("--action-scheme", track("action_scheme"), "symbolic|word|phrase");
  cmd->add_option_function<std::string>("--pruning", track("pruning"), "voxel pruning on|off");
  cmd->add_option_function<std::string>("--prune-stride", track("prune_stride"), "pruning stride K");
  cmd->add_option_function<std::string>("--prune-theta", track("prune_theta"), "frame-drop threshold");
  cmd->add_option_function<std::string>("--voxel-size", track("voxel_size"), "voxel edge, meters");
  cmd->add_option_function<std::string>("--success-radius", track("success_radius"), "d_th, meters");
  cmd->add_option_function<std::string>("--latency-prefill", track("latency_prefill"), "seconds per prefill token");
  cmd->add_option_function<std::string>("--latency-decode", track("latency_decode"), "seconds per decode token");
  cmd->add_option_function<std::string>("--policy", track("policy"), "expert|decoder");
  cmd->add_option_function<std::string>("--max-steps", track("max_steps"), "step budget per episode");
  cmd->add_option_function<std::string>("--threads", track("threads"), "episode worker threads");
  cmd->add_option_function<std::string>("--bench-sessions", track("bench_sessions"), "sessions in bench-latency");
  cmd->add_option_function<std::string>("--model-layers", track("model_layers"), "decoder layers");
  cmd->add_option_function<std::string>("--model-heads", track("model_heads"), "attention heads");
  cmd->add_option_function<std::string>("--model-head-dim", track("model_head_dim"), "per-head dim");
  cmd->add_option_function<std::string>("--hfov-deg", track("hfov_deg"), "horizontal FOV, degrees");
  cmd->add_option_function<std::string>("--patch-grid", track("patch_grid"), "patch grid side (H=W)");
  cmd->add_option_function<std::string>("--max-range", track("max_range"), "depth range, meters");
  cmd->add_option_function<std::string>("--out-dir", track("out_dir"), "output directory");
}

RunConfig resolve_config(const std::string& config_file,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (!config_file.empty()) cfg = navstream::load_config_file(config_file);
  for (const auto& [key, value] : overrides) navstream::apply_config_entry(cfg, key, value);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slow-fast streaming context testbed for dialogue-driven navigation"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;

  CLI::App* run = app.add_subcommand("run", "run episodes; writes episodes.jsonl and metrics.csv");
  add_common_flags(run, config_file, overrides);
  CLI::App* bench = app.add_subcommand("bench-latency", "per-turn prefill/decode counts and modeled latency");
  add_common_flags(bench, config_file, overrides);
  CLI::App* prune = app.add_subcommand("prune-report", "per-assembly voxel pruning statistics");
  add_common_flags(prune, config_file, overrides);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve_config(config_file, overrides);
    if (run->parsed()) return navstream::cmd_run(cfg);
    if (bench->parsed()) return navstream::cmd_bench_latency(cfg);
    if (prune->parsed()) return navstream::cmd_prune_report(cfg);
    return 2;
  } catch (const navstream::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
