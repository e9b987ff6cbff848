#include "navstream/context.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace navstream {

Session::Session(const Decoder& decoder, ContextParams params)
    : decoder_(decoder), params_(std::move(params)), cache_(decoder.make_cache()),
      trie_(params_.scheme, decoder.vocab()) {}

int Session::memory_rows() const {
  int n = 0;
  for (const MemoryBlock& b : memory_) n += static_cast<int>(b.retained.size());
  return n;
}

std::vector<Token> Session::observation_tokens(const Frame& frame) const {
  const Vocabulary& vocab = decoder_.vocab();
  std::vector<Token> out;
  out.reserve(static_cast<size_t>(frame.rows) * static_cast<size_t>(frame.cols));
  for (int x = 0; x < frame.rows; ++x) {
    for (int y = 0; y < frame.cols; ++y) {
      out.push_back(make_patch_token(vocab, frame.t, x, y, frame.at(x, y)));
    }
  }
  return out;
}

std::vector<int> Session::sample_indices(int available, int wanted) const {
  std::vector<int> idx;
  if (available <= 0) return idx;
  if (wanted >= available) {
    idx.resize(static_cast<size_t>(available));
    for (int i = 0; i < available; ++i) idx[static_cast<size_t>(i)] = i;
    return idx;
  }
  if (wanted == 1) {
    idx.push_back(available - 1);
    return idx;
  }
  // Uniform-index sampling, endpoints included so the newest frame survives.
  for (int i = 0; i < wanted; ++i) {
    double pos = static_cast<double>(i) * static_cast<double>(available - 1) / static_cast<double>(wanted - 1);
    int j = static_cast<int>(std::lround(pos));
    if (idx.empty() || idx.back() != j) idx.push_back(j);
  }
  return idx;
}

Session::TurnResult Session::run_turn(const Frame& frame, const std::string& instruction) {
  return run_turn_impl(frame, instruction, std::nullopt);
}

Session::TurnResult Session::run_turn(const Frame& frame, const std::string& instruction,
                                      std::span<const ActionKind> forced) {
  return run_turn_impl(frame, instruction, forced);
}

Session::TurnResult Session::run_turn_impl(const Frame& frame, const std::string& instruction,
                                           std::optional<std::span<const ActionKind>> forced) {
  if (terminated_) throw EpisodeTerminated("run_turn after Stop");
  if (window_full()) slide_window();

  const Vocabulary& vocab = decoder_.vocab();
  int turn = global_turn_;
  int session = turn / params_.window_size;
  bool session_start = window_.empty();

  TurnCost cost;
  cost.turn_index = turn;
  cost.session_index = session;
  cost.session_start = session_start;
  cost.memory_rows = memory_rows();
  std::int64_t prefill0 = cache_.prefill_tokens();
  std::int64_t decode0 = cache_.decode_steps();

  if (session_start) {
    // Memory rows from earlier sessions are already live in the cache at
    // their original positions; the prompt's memory slot marks where they
    // bind and contributes no prefilled token itself.
    std::vector<Token> prompt = build_session_prompt(instruction, session, !memory_.empty(), vocab);
    std::erase_if(prompt, [&](const Token& t) { return vocab.is_slot(t.id); });
    cost.prompt_tokens = static_cast<int>(prompt.size());
    decoder_.prefill(cache_, prompt);
  }

  std::vector<Token> input = build_turn_prefix(turn, vocab);
  std::erase_if(input, [&](const Token& t) { return vocab.is_slot(t.id); });
  cost.prefix_tokens = static_cast<int>(input.size());
  std::vector<Token> obs = observation_tokens(frame);
  cost.obs_tokens = static_cast<int>(obs.size());
  input.insert(input.end(), obs.begin(), obs.end());
  Logits logits = decoder_.prefill(cache_, input);

  TurnResult result;
  if (forced) {
    std::vector<Token> toks = encode_actions(*forced, params_.scheme, vocab);
    for (const Token& tok : toks) {
      auto [l, next] = decoder_.decode_step(cache_, tok);
      logits = std::move(l);
    }
    result.actions.assign(forced->begin(), forced->end());
  } else {
    int state = trie_.root();
    int tok_id = decoder_.argmax(logits, trie_.allowed(state));
    while (true) {
      auto step = trie_.advance(state, tok_id);
      state = step.next_state;
      bool done = false;
      if (step.completed) {
        result.actions.push_back(*step.completed);
        done = *step.completed == ActionKind::Stop ||
               static_cast<int>(result.actions.size()) >= kActionsPerTurn;
      }
      Token tok{TokenKind::Action, tok_id, {}, -1.0};
      auto [l, next] = decoder_.decode_step(cache_, tok, done ? std::span<const int>{} : trie_.allowed(state));
      logits = std::move(l);
      if (done) break;
      tok_id = next.id;
    }
  }
  result.last_logits = std::move(logits);

  terminated_ = std::find(result.actions.begin(), result.actions.end(), ActionKind::Stop) != result.actions.end();
  window_.push_back(DialogueTurn{turn, frame, result.actions});
  ++global_turn_;

  cost.prefill_tokens = cache_.prefill_tokens() - prefill0;
  cost.decode_tokens = cache_.decode_steps() - decode0;
  cost_log_.push_back(cost);
  result.cost = cost;
  return result;
}

void Session::slide_window() {
  if (!window_full()) {
    throw WindowNotFull("slide_window with " + std::to_string(window_.size()) + " of " +
                        std::to_string(params_.window_size) + " turns");
  }

  std::vector<int> sampled = sample_indices(static_cast<int>(window_.size()), params_.memory_frames);
  std::vector<Frame> new_frames;
  std::unordered_set<int> sampled_ts;
  for (int i : sampled) {
    new_frames.push_back(window_[static_cast<size_t>(i)].observation);
    sampled_ts.insert(new_frames.back().t);
  }

  MemoryBlock block;
  block.block_index = static_cast<int>(memory_.size());
  block.frames = new_frames;

  if (params_.pruning) {
    // Joint voxel map over all memory frames, old and new. Old frames are
    // masked down to their surviving patches so already-pruned tokens cannot
    // win a group.
    std::vector<Frame> all_frames;
    for (const MemoryBlock& b : memory_) {
      std::unordered_set<std::int64_t> keep;
      for (const PatchCoord& c : b.retained) {
        keep.insert((static_cast<std::int64_t>(c.frame_t) << 20) | (c.x << 10) | c.y);
      }
      for (const Frame& f : b.frames) {
        Frame masked = f;
        for (int x = 0; x < f.rows; ++x) {
          for (int y = 0; y < f.cols; ++y) {
            if (!keep.count((static_cast<std::int64_t>(f.t) << 20) | (x << 10) | y)) masked.at(x, y) = -1.0;
          }
        }
        all_frames.push_back(std::move(masked));
      }
    }
    all_frames.insert(all_frames.end(), new_frames.begin(), new_frames.end());
    std::sort(all_frames.begin(), all_frames.end(), [](const Frame& a, const Frame& b) { return a.t < b.t; });

    VoxelMap vmap = build_voxel_map(all_frames, params_.intrinsics, params_.voxel_size);
    PruneMask mask = voxel_prune(vmap, params_.prune);
    PruneMask pre_theta = voxel_prune(vmap, PruneParams{params_.prune.stride, 0.0});

    cache_.evict([&](const KVCache::Row& row) {
      switch (row.token.kind) {
        case TokenKind::Prompt:
        case TokenKind::Action:
          return false;  // non-observation states are discarded at offload
        case TokenKind::Observation:
          if (!sampled_ts.count(row.token.patch.frame_t)) return false;
          return mask.at(row.token.patch.frame_t, row.token.patch.x, row.token.patch.y);
        case TokenKind::Memory:
          return mask.at(row.token.patch.frame_t, row.token.patch.x, row.token.patch.y);
      }
      return true;
    });

    // Older blocks may shrink when a new frame re-observes their voxels
    // within the same stride period.
    for (MemoryBlock& b : memory_) {
      std::vector<PatchCoord> retained;
      std::vector<int> positions;
      for (size_t i = 0; i < b.retained.size(); ++i) {
        const PatchCoord& c = b.retained[i];
        if (mask.at(c.frame_t, c.x, c.y)) {
          retained.push_back(c);
          positions.push_back(b.positions[i]);
        }
      }
      b.retained = std::move(retained);
      b.positions = std::move(positions);
    }

    for (const Frame& f : new_frames) {
      PruneFrameStat stat;
      stat.block_index = block.block_index;
      stat.frame_t = f.t;
      for (int x = 0; x < f.rows; ++x) {
        for (int y = 0; y < f.cols; ++y) {
          stat.valid += (vmap.at(f.t, x, y) >= 0);
          stat.retained += mask.at(f.t, x, y);
        }
      }
      stat.dropped = pre_theta.frame_retained(f.t) > 0 && mask.frame_retained(f.t) == 0;
      block.valid_at_assembly += stat.valid;
      block.retained_at_assembly += stat.retained;
      prune_log_.push_back(stat);
    }
  } else {
    cache_.evict([&](const KVCache::Row& row) {
      switch (row.token.kind) {
        case TokenKind::Prompt:
        case TokenKind::Action:
          return false;
        case TokenKind::Observation:
          return sampled_ts.count(row.token.patch.frame_t) > 0;
        case TokenKind::Memory:
          return true;
      }
      return true;
    });
    for (const Frame& f : new_frames) {
      PruneFrameStat stat;
      stat.block_index = block.block_index;
      stat.frame_t = f.t;
      stat.valid = f.rows * f.cols;
      stat.retained = stat.valid;
      block.valid_at_assembly += stat.valid;
      block.retained_at_assembly += stat.retained;
      prune_log_.push_back(stat);
    }
  }

  // Flip the surviving window observations into memory rows and record them
  // in the new block, in cache row order (positions stay untouched).
  const auto& meta = cache_.row_meta();
  for (int i = 0; i < static_cast<int>(meta.size()); ++i) {
    const KVCache::Row& row = meta[static_cast<size_t>(i)];
    if (row.token.kind == TokenKind::Observation) {
      cache_.set_row_kind(i, TokenKind::Memory);
      block.retained.push_back(row.token.patch);
      block.positions.push_back(row.position);
    }
  }

  memory_.push_back(std::move(block));
  window_.clear();
}

std::vector<std::int64_t> prefill_count_curve(std::span<const TurnCost> log, CurveMode mode) {
  std::vector<std::int64_t> out;
  out.reserve(log.size());
  std::int64_t session_prompt = 0;
  std::int64_t session_obs_acc = 0;
  for (size_t i = 0; i < log.size(); ++i) {
    const TurnCost& c = log[i];
    if (c.session_start) {
      session_prompt = c.prompt_tokens;
      session_obs_acc = 0;
    }
    session_obs_acc += c.prefix_tokens + c.obs_tokens;
    switch (mode) {
      case CurveMode::FullTurns:
        out.push_back((i == 0 ? c.prompt_tokens : 0) + c.prefix_tokens + c.obs_tokens);
        break;
      case CurveMode::SlidingWindow:
        out.push_back((c.session_start ? c.prompt_tokens + c.memory_rows : 0) + c.prefix_tokens + c.obs_tokens);
        break;
      case CurveMode::SingleTurn:
        out.push_back(session_prompt + c.memory_rows + session_obs_acc);
        break;
    }
  }
  return out;
}

std::vector<double> modeled_latency(std::span<const std::int64_t> prefill, std::span<const std::int64_t> decode,
                                    double a, double b) {
  std::vector<double> out;
  out.reserve(prefill.size());
  for (size_t i = 0; i < prefill.size(); ++i) {
    out.push_back(a * static_cast<double>(prefill[i]) + b * static_cast<double>(decode[i]));
  }
  return out;
}

}  // namespace navstream
