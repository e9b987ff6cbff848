#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "navstream/tokenspace.hpp"

namespace navstream {

/// Dimensions and seed of the toy decoder. Weights are a pure function of the
/// seed: same config, same model, on any platform.
struct ModelConfig {
  int layers = 2;
  int heads = 4;
  int head_dim = 8;
  std::uint64_t seed = 0x7265737465643173ULL;
  double max_depth = 10.0;  // normalizes observation depth features
  int grid_h = 14;          // normalizes patch coordinates
  int grid_w = 14;

  int model_dim() const { return heads * head_dim; }
};

struct Logits {
  std::vector<double> values;
};

/// Per-layer key/value store for already-encoded tokens. Rows are appended in
/// strictly increasing position order; eviction removes rows but never
/// rewrites surviving values or positions. Also carries the session's cost
/// counters.
class KVCache {
 public:
  struct Row {
    Token token;
    int position = 0;
  };

  explicit KVCache(const ModelConfig& cfg);

  int rows() const { return static_cast<int>(meta_.size()); }
  const std::vector<Row>& row_meta() const { return meta_; }
  int next_position() const { return next_position_; }

  std::int64_t prefill_tokens() const { return prefill_tokens_; }
  std::int64_t decode_steps() const { return decode_steps_; }

  /// Drop every row failing the predicate, identically in all layers.
  void evict(const std::function<bool(const Row&)>& keep);

  /// Reclassify a row's role (used when window observations are offloaded
  /// into memory). Key/value data and position are untouched.
  void set_row_kind(int row, TokenKind kind) { meta_[static_cast<size_t>(row)].token.kind = kind; }

  /// Tokens and positions of the live rows, in row order (oracle input).
  std::vector<Token> row_tokens() const;
  std::vector<int> row_positions() const;

  /// Raw per-layer key/value storage (rows x model_dim, row-major).
  std::span<const double> layer_k(int layer) const { return k_[static_cast<size_t>(layer)]; }
  std::span<const double> layer_v(int layer) const { return v_[static_cast<size_t>(layer)]; }

 private:
  friend class Decoder;
  int layers_ = 0;
  int dim_ = 0;
  int next_position_ = 0;
  std::int64_t prefill_tokens_ = 0;
  std::int64_t decode_steps_ = 0;
  std::vector<Row> meta_;
  std::vector<std::vector<double>> k_;  // [layer] rows x dim, row-major
  std::vector<std::vector<double>> v_;
};

/// Deterministic causal-attention decoder with an explicit KV cache.
///
/// Keys and values are projected from each token's context-free encoding
/// (embedding plus absolute sinusoidal position), while dialogue context
/// flows through the query path only. Cached rows are therefore pure
/// functions of (token, position): evicting rows never alters survivors, and
/// decoding over any evicted cache matches a full recompute of the survivor
/// subsequence at its original positions.
class Decoder {
 public:
  Decoder(const ModelConfig& cfg, std::shared_ptr<const Vocabulary> vocab);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return *vocab_; }
  KVCache make_cache() const { return KVCache(cfg_); }

  /// Encode a batch of input tokens into the cache; returns the logits at the
  /// last token. Positions continue from the cache's append counter.
  Logits prefill(KVCache& cache, std::span<const Token> tokens) const;

  /// Append prev_token and return the next-token logits plus the greedy
  /// argmax, restricted to allowed_ids when nonempty (action-generation
  /// mode), over the full vocabulary otherwise.
  std::pair<Logits, Token> decode_step(KVCache& cache, const Token& prev_token,
                                       std::span<const int> allowed_ids = {}) const;

  /// Reference oracle: single-pass causal attention over the whole sequence,
  /// logits at every position, no cache mutation. Positions are 0..n-1 unless
  /// given explicitly.
  std::vector<Logits> full_recompute(std::span<const Token> tokens) const;
  std::vector<Logits> full_recompute(std::span<const Token> tokens, std::span<const int> positions) const;

  int argmax(const Logits& logits, std::span<const int> allowed_ids = {}) const;

  /// Cache footprint: 2 * layers * heads * head_dim * n_tokens * bytes.
  static std::int64_t estimate_kv_bytes(const ModelConfig& cfg, std::int64_t n_tokens, int bytes_per_scalar);

 private:
  struct LayerWeights {
    std::vector<double> wq, wk, wv, wo;  // dim x dim
    std::vector<double> w1;              // hidden x dim
    std::vector<double> w2;              // dim x hidden
  };

  std::vector<double> encode(const Token& tok, int position) const;
  void append_rows(KVCache& cache, std::span<const Token> tokens, std::span<const int> positions,
                   std::vector<std::vector<double>>& encodings) const;
  std::vector<Logits> forward(KVCache& cache, std::span<const Token> tokens, std::span<const int> positions,
                              bool all_logits) const;
  Logits logits_for(std::span<const double> h) const;

  ModelConfig cfg_;
  std::shared_ptr<const Vocabulary> vocab_;
  int hidden_ = 0;
  std::vector<double> embedding_;  // vocab x dim
  std::vector<double> obs_w_;      // dim x 4
  std::vector<double> obs_b_;      // dim
  std::vector<LayerWeights> layers_;
  std::vector<double> wout_;       // vocab x dim
};

}  // namespace navstream
