#include "navstream/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "navstream/rng.hpp"

namespace navstream {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for " + key + ": " + value);
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value for " + key + ": " + value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid seed value for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("invalid boolean value for " + key + ": " + value);
}

}  // namespace

std::string to_string(Policy p) { return p == Policy::Expert ? "expert" : "decoder"; }

std::string to_string(ActionScheme s) {
  switch (s) {
    case ActionScheme::SymbolicSingle: return "symbolic";
    case ActionScheme::WordSingle: return "word";
    case ActionScheme::NaturalPhrase: return "phrase";
  }
  return "symbolic";
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "world_size") cfg.world_size = static_cast<int>(parse_int(key, value));
  else if (key == "episodes") cfg.episodes = static_cast<int>(parse_int(key, value));
  else if (key == "window_size") cfg.window_size = static_cast<int>(parse_int(key, value));
  else if (key == "memory_frames") cfg.memory_frames = static_cast<int>(parse_int(key, value));
  else if (key == "action_scheme") {
    if (value == "symbolic") cfg.scheme = ActionScheme::SymbolicSingle;
    else if (value == "word") cfg.scheme = ActionScheme::WordSingle;
    else if (value == "phrase") cfg.scheme = ActionScheme::NaturalPhrase;
    else throw ConfigError("action_scheme must be symbolic|word|phrase, got " + value);
  } else if (key == "pruning") cfg.pruning = parse_bool(key, value);
  else if (key == "prune_stride") cfg.prune_stride = static_cast<int>(parse_int(key, value));
  else if (key == "prune_theta") cfg.prune_theta = parse_double(key, value);
  else if (key == "voxel_size") cfg.voxel_size = parse_double(key, value);
  else if (key == "success_radius") cfg.success_radius = parse_double(key, value);
  else if (key == "latency_prefill") cfg.latency_prefill = parse_double(key, value);
  else if (key == "latency_decode") cfg.latency_decode = parse_double(key, value);
  else if (key == "policy") {
    if (value == "expert") cfg.policy = Policy::Expert;
    else if (value == "decoder") cfg.policy = Policy::Decoder;
    else throw ConfigError("policy must be expert|decoder, got " + value);
  } else if (key == "max_steps") cfg.max_steps = static_cast<int>(parse_int(key, value));
  else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, value));
  else if (key == "bench_sessions") cfg.bench_sessions = static_cast<int>(parse_int(key, value));
  else if (key == "model_layers") cfg.model_layers = static_cast<int>(parse_int(key, value));
  else if (key == "model_heads") cfg.model_heads = static_cast<int>(parse_int(key, value));
  else if (key == "model_head_dim") cfg.model_head_dim = static_cast<int>(parse_int(key, value));
  else if (key == "hfov_deg") cfg.hfov_deg = parse_double(key, value);
  else if (key == "patch_grid") cfg.patch_grid = static_cast<int>(parse_int(key, value));
  else if (key == "max_range") cfg.max_range = parse_double(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else throw ConfigError("unknown config key: " + key);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + " missing '=': " + line);
    }
    apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (world_size < 8) fail("world_size must be >= 8");
  if (episodes < 1) fail("episodes must be >= 1");
  if (window_size < 1) fail("window_size must be >= 1");
  if (memory_frames < 1 || memory_frames > window_size) fail("memory_frames must be in [1, window_size]");
  if (prune_stride < 1) fail("prune_stride must be >= 1");
  if (prune_theta < 0.0 || prune_theta > 1.0) fail("prune_theta must be in [0, 1]");
  if (!(voxel_size > 0.0)) fail("voxel_size must be > 0");
  if (!(success_radius > 0.0)) fail("success_radius must be > 0");
  if (!(latency_prefill > 0.0) || !(latency_decode > 0.0)) fail("latency constants must be > 0");
  if (max_steps < kActionsPerTurn) fail("max_steps must be >= 4");
  if (threads < 1) fail("threads must be >= 1");
  if (bench_sessions < 1) fail("bench_sessions must be >= 1");
  if (model_layers < 1 || model_heads < 1 || model_head_dim < 1) fail("model dims must be >= 1");
  if (!(hfov_deg > 0.0) || hfov_deg >= 180.0) fail("hfov_deg must be in (0, 180)");
  if (patch_grid < 2) fail("patch_grid must be >= 2");
  if (!(max_range > 0.0)) fail("max_range must be > 0");
  if (out_dir.empty()) fail("out_dir must not be empty");
}

Intrinsics RunConfig::intrinsics() const {
  Intrinsics intr;
  intr.hfov = hfov_deg * M_PI / 180.0;
  intr.grid_h = patch_grid;
  intr.grid_w = patch_grid;
  intr.max_range = max_range;
  return intr;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.layers = model_layers;
  m.heads = model_heads;
  m.head_dim = model_head_dim;
  m.seed = mix_seed(seed, 0x77656967687473ULL);
  m.max_depth = max_range;
  m.grid_h = patch_grid;
  m.grid_w = patch_grid;
  return m;
}

ContextParams RunConfig::context_params() const {
  ContextParams p;
  p.window_size = window_size;
  p.memory_frames = memory_frames;
  p.scheme = scheme;
  p.pruning = pruning;
  p.prune = PruneParams{prune_stride, prune_theta};
  p.voxel_size = voxel_size;
  p.intrinsics = intrinsics();
  return p;
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "seed=" << cfg.seed << '\n'
      << "world_size=" << cfg.world_size << '\n'
      << "episodes=" << cfg.episodes << '\n'
      << "window_size=" << cfg.window_size << '\n'
      << "memory_frames=" << cfg.memory_frames << '\n'
      << "action_scheme=" << to_string(cfg.scheme) << '\n'
      << "pruning=" << (cfg.pruning ? "true" : "false") << '\n'
      << "prune_stride=" << cfg.prune_stride << '\n'
      << "prune_theta=" << format_double(cfg.prune_theta) << '\n'
      << "voxel_size=" << format_double(cfg.voxel_size) << '\n'
      << "success_radius=" << format_double(cfg.success_radius) << '\n'
      << "latency_prefill=" << format_double(cfg.latency_prefill) << '\n'
      << "latency_decode=" << format_double(cfg.latency_decode) << '\n'
      << "policy=" << to_string(cfg.policy) << '\n'
      << "max_steps=" << cfg.max_steps << '\n'
      << "threads=" << cfg.threads << '\n'
      << "bench_sessions=" << cfg.bench_sessions << '\n'
      << "model_layers=" << cfg.model_layers << '\n'
      << "model_heads=" << cfg.model_heads << '\n'
      << "model_head_dim=" << cfg.model_head_dim << '\n'
      << "hfov_deg=" << format_double(cfg.hfov_deg) << '\n'
      << "patch_grid=" << cfg.patch_grid << '\n'
      << "max_range=" << format_double(cfg.max_range) << '\n'
      << "out_dir=" << cfg.out_dir << '\n';
  return out.str();
}

std::string config_hash(const RunConfig& cfg) {
  // out_dir and threads do not affect results, so they stay out of the hash.
  RunConfig canonical = cfg;
  canonical.out_dir = "out";
  canonical.threads = 1;
  std::string text = serialize_config(canonical);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace navstream
