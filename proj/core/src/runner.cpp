#include "navstream/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "navstream/rng.hpp"

namespace navstream {

namespace {

constexpr std::uint64_t kWorldStream = 1000;

double expert_radius(const RunConfig& cfg) { return std::min(0.5, cfg.success_radius); }

void csv_preamble(std::ostream& out, const RunConfig& cfg) {
  out << "# config_hash=" << config_hash(cfg) << " seed=" << cfg.seed << '\n';
}

nlohmann::json pose_json(const Pose& p) { return nlohmann::json{p.x, p.y, p.yaw}; }

}  // namespace

const char* action_name(ActionKind a) {
  switch (a) {
    case ActionKind::MoveForward: return "forward";
    case ActionKind::TurnLeft: return "left";
    case ActionKind::TurnRight: return "right";
    case ActionKind::Stop: return "stop";
  }
  return "?";
}

EpisodeOutcome run_episode(const RunConfig& cfg, int episode_index, const Decoder& decoder) {
  EpisodeOutcome out;
  out.index = episode_index;
  out.world = generate_world(mix_seed(cfg.seed, kWorldStream + static_cast<std::uint64_t>(episode_index)),
                             cfg.world_size);
  const World& world = out.world;
  Intrinsics intr = cfg.intrinsics();

  Episode& ep = out.episode;
  ep.instruction = route_instruction(world);
  ep.start = world.start;
  ep.goal = world.goal;
  Pose pose = world.start;
  ep.path.push_back(pose);

  Session session(decoder, cfg.context_params());
  double stop_radius = expert_radius(cfg);

  while (!session.terminated() && static_cast<int>(ep.actions.size()) < cfg.max_steps) {
    Frame frame = render_depth(world, pose, intr, session.global_turn());
    ep.frames.push_back(frame);

    std::vector<ActionKind> applied;
    if (cfg.policy == Policy::Expert) {
      std::vector<ActionKind> forced;
      for (int k = 0; k < kActionsPerTurn && static_cast<int>(ep.actions.size() + forced.size()) < cfg.max_steps;
           ++k) {
        ActionKind a = expert_action(world, pose, world.goal, stop_radius);
        forced.push_back(a);
        pose = step_agent(world, pose, a);
        ep.path.push_back(pose);
        if (a == ActionKind::Stop) break;
      }
      session.run_turn(frame, ep.instruction, forced);
      applied = forced;
    } else {
      auto res = session.run_turn(frame, ep.instruction);
      applied = res.actions;
      if (static_cast<int>(ep.actions.size() + applied.size()) > cfg.max_steps) {
        applied.resize(static_cast<size_t>(cfg.max_steps) - ep.actions.size());
      }
      for (ActionKind a : applied) {
        pose = step_agent(world, pose, a);
        ep.path.push_back(pose);
      }
    }
    ep.actions.insert(ep.actions.end(), applied.begin(), applied.end());
  }
  out.stopped = session.terminated();

  // Offload the final window when it completed exactly at episode end, so its
  // memory block and prune stats exist.
  if (session.window_full()) session.slide_window();

  out.cost_log = session.cost_log();
  out.prune_log = session.prune_log();
  out.memory_blocks = session.memory_blocks();
  out.result = evaluate_episode(world, ep, cfg.success_radius);
  return out;
}

std::vector<EpisodeOutcome> run_episodes(const RunConfig& cfg, const Decoder& decoder) {
  std::vector<EpisodeOutcome> outcomes(static_cast<size_t>(cfg.episodes));
  if (cfg.threads <= 1) {
    for (int i = 0; i < cfg.episodes; ++i) outcomes[static_cast<size_t>(i)] = run_episode(cfg, i, decoder);
    return outcomes;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= cfg.episodes) return;
      outcomes[static_cast<size_t>(i)] = run_episode(cfg, i, decoder);
    }
  };
  std::vector<std::thread> pool;
  int n = std::min(cfg.threads, cfg.episodes);
  pool.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return outcomes;
}

EpisodeOutcome run_bench_episode(const RunConfig& cfg, const Decoder& decoder) {
  EpisodeOutcome out;
  out.index = 0;
  out.world = generate_world(mix_seed(cfg.seed, kWorldStream), cfg.world_size);
  const World& world = out.world;
  Intrinsics intr = cfg.intrinsics();

  Episode& ep = out.episode;
  ep.instruction = route_instruction(world);
  ep.start = world.start;
  ep.goal = world.goal;
  Pose pose = world.start;
  ep.path.push_back(pose);

  Session session(decoder, cfg.context_params());
  const std::vector<ActionKind> patrol(kActionsPerTurn, ActionKind::MoveForward);
  int turns = cfg.bench_sessions * cfg.window_size;
  for (int t = 0; t < turns; ++t) {
    Frame frame = render_depth(world, pose, intr, t);
    ep.frames.push_back(frame);
    session.run_turn(frame, ep.instruction, patrol);
    for (ActionKind a : patrol) {
      pose = step_agent(world, pose, a);
      ep.path.push_back(pose);
      ep.actions.push_back(a);
    }
  }
  if (session.window_full()) session.slide_window();

  out.cost_log = session.cost_log();
  out.prune_log = session.prune_log();
  out.memory_blocks = session.memory_blocks();
  out.result = evaluate_episode(world, ep, cfg.success_radius);
  return out;
}

int cmd_run(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  auto vocab = std::make_shared<const Vocabulary>();
  Decoder decoder(cfg.model_config(), vocab);
  std::uint64_t weight_seed = cfg.model_config().seed;

  auto outcomes = run_episodes(cfg, decoder);

  std::ofstream jout(cfg.episodes_path(), std::ios::binary);
  if (!jout) throw Error("cannot write " + cfg.episodes_path());
  Vocabulary::Partition part = vocab->partition();
  nlohmann::json meta{{"type", "meta"},
                      {"command", "run"},
                      {"config_hash", config_hash(cfg)},
                      {"seed", cfg.seed},
                      {"weight_seed", weight_seed},
                      {"episodes", cfg.episodes},
                      {"vocab", nlohmann::json{{"specials", part.specials},
                                               {"words", part.words},
                                               {"phrases", part.phrases},
                                               {"actions", part.actions},
                                               {"size", vocab->size()}}}};
  jout << meta.dump() << '\n';

  std::filesystem::create_directories(cfg.out_dir + "/worlds");
  for (const EpisodeOutcome& o : outcomes) {
    std::ofstream wout(cfg.out_dir + "/worlds/episode_" + std::to_string(o.index) + ".json", std::ios::binary);
    wout << o.world.to_json() << '\n';
  }

  std::vector<EpisodeResult> results;
  for (const EpisodeOutcome& o : outcomes) {
    size_t action_cursor = 0;
    for (const TurnCost& c : o.cost_log) {
      nlohmann::json rec{{"type", "turn"},
                         {"episode", o.index},
                         {"turn", c.turn_index},
                         {"session", c.session_index},
                         {"session_start", c.session_start},
                         {"pose", pose_json(o.episode.frames[static_cast<size_t>(c.turn_index)].pose)},
                         {"prompt_tokens", c.prompt_tokens},
                         {"prefix_tokens", c.prefix_tokens},
                         {"obs_tokens", c.obs_tokens},
                         {"memory_rows", c.memory_rows},
                         {"prefill_tokens", c.prefill_tokens},
                         {"decode_tokens", c.decode_tokens},
                         {"seed", weight_seed}};
      nlohmann::json acts = nlohmann::json::array();
      for (size_t k = 0; k < static_cast<size_t>(kActionsPerTurn) && action_cursor < o.episode.actions.size();
           ++k) {
        ActionKind a = o.episode.actions[action_cursor++];
        acts.push_back(action_name(a));
        if (a == ActionKind::Stop) break;
      }
      rec["actions"] = acts;
      jout << rec.dump() << '\n';
    }
    for (const PruneFrameStat& s : o.prune_log) {
      nlohmann::json rec{{"type", "prune"},    {"episode", o.index},     {"block", s.block_index},
                         {"frame_t", s.frame_t}, {"valid", s.valid},     {"retained", s.retained},
                         {"dropped", s.dropped}, {"seed", weight_seed}};
      jout << rec.dump() << '\n';
    }
    const EpisodeResult& r = o.result;
    nlohmann::json summary{{"type", "episode"},
                           {"episode", o.index},
                           {"instruction", o.episode.instruction},
                           {"steps", o.episode.actions.size()},
                           {"stopped", o.stopped},
                           {"ne", navigation_error(r)},
                           {"success", success(r)},
                           {"oracle_success", oracle_success(r)},
                           {"path_length", r.path_length},
                           {"shortest_length", r.shortest_length},
                           {"ndtw", ndtw(r.positions, r.reference, r.success_threshold)},
                           {"seed", weight_seed}};
    jout << summary.dump() << '\n';
    results.push_back(r);
  }
  jout.close();

  std::ofstream mout(cfg.metrics_path(), std::ios::binary);
  if (!mout) throw Error("cannot write " + cfg.metrics_path());
  csv_preamble(mout, cfg);
  write_metrics_csv(mout, summarize(results));
  return 0;
}

int cmd_bench_latency(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  auto vocab = std::make_shared<const Vocabulary>();
  Decoder decoder(cfg.model_config(), vocab);

  EpisodeOutcome o = run_bench_episode(cfg, decoder);

  std::vector<std::int64_t> decode;
  decode.reserve(o.cost_log.size());
  for (const TurnCost& c : o.cost_log) decode.push_back(c.decode_tokens);

  struct ModeRow {
    CurveMode mode;
    const char* name;
  };
  const ModeRow modes[] = {{CurveMode::FullTurns, "full_turns"},
                           {CurveMode::SlidingWindow, "sliding_window"},
                           {CurveMode::SingleTurn, "single_turn"}};

  std::ofstream bout(cfg.bench_path(), std::ios::binary);
  if (!bout) throw Error("cannot write " + cfg.bench_path());
  csv_preamble(bout, cfg);
  bout << "turn,mode,prefill_tokens,decode_tokens,modeled_latency\n";
  for (const ModeRow& m : modes) {
    auto curve = prefill_count_curve(o.cost_log, m.mode);
    auto latency = modeled_latency(curve, decode, cfg.latency_prefill, cfg.latency_decode);
    for (size_t t = 0; t < curve.size(); ++t) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%zu,%s,%lld,%lld,%.6f\n", t, m.name,
                    static_cast<long long>(curve[t]), static_cast<long long>(decode[t]), latency[t]);
      bout << buf;
    }
  }
  return 0;
}

int cmd_prune_report(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  auto vocab = std::make_shared<const Vocabulary>();
  Decoder decoder(cfg.model_config(), vocab);

  auto outcomes = run_episodes(cfg, decoder);

  std::ofstream pout(cfg.prune_report_path(), std::ios::binary);
  if (!pout) throw Error("cannot write " + cfg.prune_report_path());
  csv_preamble(pout, cfg);
  pout << "episode,block,t,valid_tokens,retained_tokens,frame_dropped_flag,cumulative_ratio\n";
  for (const EpisodeOutcome& o : outcomes) {
    std::int64_t valid_acc = 0, retained_acc = 0;
    for (const PruneFrameStat& s : o.prune_log) {
      valid_acc += s.valid;
      retained_acc += s.retained;
      double cum = valid_acc > 0
                       ? static_cast<double>(valid_acc - retained_acc) / static_cast<double>(valid_acc)
                       : 0.0;
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d,%d,%.6f\n", o.index, s.block_index, s.frame_t, s.valid,
                    s.retained, s.dropped ? 1 : 0, cum);
      pout << buf;
    }
  }
  return 0;
}

}  // namespace navstream
