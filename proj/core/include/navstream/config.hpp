#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "navstream/context.hpp"
#include "navstream/decoder.hpp"
#include "navstream/tokenspace.hpp"

namespace navstream {

enum class Policy { Expert, Decoder };

/// Run configuration. Serialized as flat key=value text; load/save round-trip
/// losslessly. Field ranges are validated on load (see validate()).
struct RunConfig {
  std::uint64_t seed = 7;
  int world_size = 24;       // occupancy grid side, cells
  int episodes = 10;
  int window_size = 8;       // N dialogue turns per session
  int memory_frames = 8;     // frames per memory block
  ActionScheme scheme = ActionScheme::SymbolicSingle;
  bool pruning = true;
  int prune_stride = 8;      // K
  double prune_theta = 0.1;  // theta
  double voxel_size = 0.5;   // meters
  double success_radius = 3.0;  // d_th, meters
  double latency_prefill = 1e-3;  // a, seconds per prefill token
  double latency_decode = 5e-3;   // b, seconds per decode token
  Policy policy = Policy::Expert;
  int max_steps = 500;
  int threads = 1;
  int bench_sessions = 3;    // sessions simulated by bench-latency
  int model_layers = 2;
  int model_heads = 4;
  int model_head_dim = 8;
  double hfov_deg = 79.0;
  int patch_grid = 14;       // H = W
  double max_range = 10.0;   // meters
  std::string out_dir = "out";

  void validate() const;  // throws ConfigError
  Intrinsics intrinsics() const;
  ModelConfig model_config() const;  // weight seed derived from seed
  ContextParams context_params() const;

  std::string episodes_path() const { return out_dir + "/episodes.jsonl"; }
  std::string metrics_path() const { return out_dir + "/metrics.csv"; }
  std::string bench_path() const { return out_dir + "/bench.csv"; }
  std::string prune_report_path() const { return out_dir + "/prune_report.csv"; }
};

/// Parse a key=value config file ('#' comments allowed); unknown keys or
/// malformed values raise ConfigError. Starts from defaults.
RunConfig load_config_file(const std::string& path);

/// Apply one key=value assignment (shared by file loading and CLI flags).
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical serialization: every key, fixed order.
std::string serialize_config(const RunConfig& cfg);

/// FNV-1a hash of the canonical serialization, as fixed-width hex.
std::string config_hash(const RunConfig& cfg);

std::string to_string(Policy p);
std::string to_string(ActionScheme s);

}  // namespace navstream
