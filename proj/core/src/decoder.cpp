#include "navstream/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "navstream/rng.hpp"

namespace navstream {

namespace {

void fill_uniform(std::vector<double>& w, size_t n, double scale, Rng& rng) {
  w.resize(n);
  for (double& x : w) x = rng.next_range(-scale, scale);
}

// y = W x with W row-major (rows x cols)
void matvec(std::span<const double> w, std::span<const double> x, std::span<double> y) {
  size_t rows = y.size(), cols = x.size();
  for (size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void layernorm(std::span<const double> x, std::span<double> y) {
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  double inv = 1.0 / std::sqrt(var + 1e-5);
  for (size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean) * inv;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
}

}  // namespace

KVCache::KVCache(const ModelConfig& cfg)
    : layers_(cfg.layers), dim_(cfg.model_dim()), k_(static_cast<size_t>(cfg.layers)),
      v_(static_cast<size_t>(cfg.layers)) {}

void KVCache::evict(const std::function<bool(const Row&)>& keep) {
  std::vector<size_t> kept;
  kept.reserve(meta_.size());
  for (size_t i = 0; i < meta_.size(); ++i) {
    if (keep(meta_[i])) kept.push_back(i);
  }
  if (kept.size() == meta_.size()) return;

  std::vector<Row> meta;
  meta.reserve(kept.size());
  for (size_t i : kept) meta.push_back(meta_[i]);
  meta_ = std::move(meta);

  size_t d = static_cast<size_t>(dim_);
  for (int l = 0; l < layers_; ++l) {
    auto compact = [&](std::vector<double>& buf) {
      std::vector<double> out(kept.size() * d);
      for (size_t r = 0; r < kept.size(); ++r) {
        std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(kept[r] * d), d,
                    out.begin() + static_cast<std::ptrdiff_t>(r * d));
      }
      buf = std::move(out);
    };
    compact(k_[static_cast<size_t>(l)]);
    compact(v_[static_cast<size_t>(l)]);
  }
}

std::vector<Token> KVCache::row_tokens() const {
  std::vector<Token> out;
  out.reserve(meta_.size());
  for (const Row& r : meta_) out.push_back(r.token);
  return out;
}

std::vector<int> KVCache::row_positions() const {
  std::vector<int> out;
  out.reserve(meta_.size());
  for (const Row& r : meta_) out.push_back(r.position);
  return out;
}

Decoder::Decoder(const ModelConfig& cfg, std::shared_ptr<const Vocabulary> vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  int d = cfg_.model_dim();
  hidden_ = 2 * d;
  size_t vs = static_cast<size_t>(vocab_->size());
  double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Rng rng(mix_seed(cfg_.seed, 0xd3c0de));
  fill_uniform(embedding_, vs * static_cast<size_t>(d), 1.0, rng);
  fill_uniform(obs_w_, static_cast<size_t>(d) * 4, 1.0, rng);
  fill_uniform(obs_b_, static_cast<size_t>(d), 1.0, rng);
  layers_.resize(static_cast<size_t>(cfg_.layers));
  for (LayerWeights& lw : layers_) {
    fill_uniform(lw.wq, static_cast<size_t>(d) * static_cast<size_t>(d), scale, rng);
    fill_uniform(lw.wk, static_cast<size_t>(d) * static_cast<size_t>(d), scale, rng);
    fill_uniform(lw.wv, static_cast<size_t>(d) * static_cast<size_t>(d), scale, rng);
    fill_uniform(lw.wo, static_cast<size_t>(d) * static_cast<size_t>(d), scale, rng);
    fill_uniform(lw.w1, static_cast<size_t>(hidden_) * static_cast<size_t>(d), scale, rng);
    fill_uniform(lw.w2, static_cast<size_t>(d) * static_cast<size_t>(hidden_), scale, rng);
  }
  fill_uniform(wout_, vs * static_cast<size_t>(d), scale, rng);
}

std::vector<double> Decoder::encode(const Token& tok, int position) const {
  int d = cfg_.model_dim();
  std::vector<double> e(static_cast<size_t>(d));
  if (tok.kind == TokenKind::Observation || tok.kind == TokenKind::Memory) {
    // Geometry-tied embedding: linear map of the patch feature vector.
    double feat[4];
    feat[0] = tok.depth > 0.0 ? std::min(tok.depth, cfg_.max_depth) / cfg_.max_depth : -1.0;
    feat[1] = static_cast<double>(tok.patch.x);
    feat[2] = static_cast<double>(tok.patch.y);
    feat[3] = (tok.patch.frame_t % 2 == 0) ? 1.0 : -1.0;
    feat[1] /= static_cast<double>(cfg_.grid_h);
    feat[2] /= static_cast<double>(cfg_.grid_w);
    for (int r = 0; r < d; ++r) {
      const double* wr = obs_w_.data() + static_cast<size_t>(r) * 4;
      e[static_cast<size_t>(r)] =
          obs_b_[static_cast<size_t>(r)] + wr[0] * feat[0] + wr[1] * feat[1] + wr[2] * feat[2] + wr[3] * feat[3];
    }
  } else {
    const double* row = embedding_.data() + static_cast<size_t>(tok.id) * static_cast<size_t>(d);
    std::copy_n(row, d, e.begin());
  }
  // Absolute sinusoidal position encoding, added at encode time.
  for (int i = 0; i < d; ++i) {
    double exponent = static_cast<double>(i - (i % 2)) / static_cast<double>(d);
    double rate = std::pow(10000.0, exponent);
    double arg = static_cast<double>(position) / rate;
    e[static_cast<size_t>(i)] += (i % 2 == 0) ? std::sin(arg) : std::cos(arg);
  }
  return e;
}

void Decoder::append_rows(KVCache& cache, std::span<const Token> tokens, std::span<const int> positions,
                          std::vector<std::vector<double>>& encodings) const {
  int d = cfg_.model_dim();
  std::vector<double> ln(static_cast<size_t>(d));
  for (size_t i = 0; i < tokens.size(); ++i) {
    encodings.push_back(encode(tokens[i], positions[i]));
    cache.meta_.push_back(KVCache::Row{tokens[i], positions[i]});
    layernorm(encodings.back(), ln);
    for (int l = 0; l < cfg_.layers; ++l) {
      auto& lw = layers_[static_cast<size_t>(l)];
      size_t old = cache.k_[static_cast<size_t>(l)].size();
      cache.k_[static_cast<size_t>(l)].resize(old + static_cast<size_t>(d));
      cache.v_[static_cast<size_t>(l)].resize(old + static_cast<size_t>(d));
      matvec(lw.wk, ln, std::span<double>(cache.k_[static_cast<size_t>(l)]).subspan(old));
      matvec(lw.wv, ln, std::span<double>(cache.v_[static_cast<size_t>(l)]).subspan(old));
    }
  }
}

Logits Decoder::logits_for(std::span<const double> h) const {
  std::vector<double> ln(h.size());
  layernorm(h, ln);
  Logits out;
  out.values.resize(static_cast<size_t>(vocab_->size()));
  matvec(wout_, ln, out.values);
  return out;
}

std::vector<Logits> Decoder::forward(KVCache& cache, std::span<const Token> tokens, std::span<const int> positions,
                                     bool all_logits) const {
  int d = cfg_.model_dim();
  int heads = cfg_.heads, hd = cfg_.head_dim;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  size_t base = static_cast<size_t>(cache.rows());

  std::vector<std::vector<double>> encodings;
  encodings.reserve(tokens.size());
  append_rows(cache, tokens, positions, encodings);

  std::vector<Logits> out;
  if (all_logits) out.reserve(tokens.size());

  std::vector<double> ln(static_cast<size_t>(d)), q(static_cast<size_t>(d)), ctx(static_cast<size_t>(d));
  std::vector<double> proj(static_cast<size_t>(d)), mlp_h(static_cast<size_t>(hidden_)), mlp_o(static_cast<size_t>(d));
  std::vector<double> scores;

  for (size_t i = 0; i < tokens.size(); ++i) {
    std::vector<double> h = encodings[i];
    size_t visible = base + i + 1;
    scores.resize(visible);
    for (int l = 0; l < cfg_.layers; ++l) {
      const auto& lw = layers_[static_cast<size_t>(l)];
      const auto& kbuf = cache.k_[static_cast<size_t>(l)];
      const auto& vbuf = cache.v_[static_cast<size_t>(l)];
      layernorm(h, ln);
      matvec(lw.wq, ln, q);
      for (int hh = 0; hh < heads; ++hh) {
        size_t off = static_cast<size_t>(hh) * static_cast<size_t>(hd);
        double maxs = -1e300;
        for (size_t r = 0; r < visible; ++r) {
          const double* kr = kbuf.data() + r * static_cast<size_t>(d) + off;
          double dot = 0.0;
          for (int c = 0; c < hd; ++c) dot += q[off + static_cast<size_t>(c)] * kr[c];
          scores[r] = dot * inv_sqrt;
          maxs = std::max(maxs, scores[r]);
        }
        double denom = 0.0;
        for (size_t r = 0; r < visible; ++r) {
          scores[r] = std::exp(scores[r] - maxs);
          denom += scores[r];
        }
        for (int c = 0; c < hd; ++c) ctx[off + static_cast<size_t>(c)] = 0.0;
        for (size_t r = 0; r < visible; ++r) {
          const double* vr = vbuf.data() + r * static_cast<size_t>(d) + off;
          double a = scores[r] / denom;
          for (int c = 0; c < hd; ++c) ctx[off + static_cast<size_t>(c)] += a * vr[c];
        }
      }
      matvec(lw.wo, ctx, proj);
      for (int c = 0; c < d; ++c) h[static_cast<size_t>(c)] += proj[static_cast<size_t>(c)];
      layernorm(h, ln);
      matvec(lw.w1, ln, mlp_h);
      for (double& x : mlp_h) x = gelu(x);
      matvec(lw.w2, mlp_h, mlp_o);
      for (int c = 0; c < d; ++c) h[static_cast<size_t>(c)] += mlp_o[static_cast<size_t>(c)];
    }
    if (all_logits) {
      out.push_back(logits_for(h));
    } else if (i + 1 == tokens.size()) {
      out.push_back(logits_for(h));
    }
  }
  return out;
}

Logits Decoder::prefill(KVCache& cache, std::span<const Token> tokens) const {
  std::vector<int> positions(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) positions[i] = cache.next_position_++;
  cache.prefill_tokens_ += static_cast<std::int64_t>(tokens.size());
  auto logits = forward(cache, tokens, positions, false);
  return logits.empty() ? Logits{} : std::move(logits.back());
}

std::pair<Logits, Token> Decoder::decode_step(KVCache& cache, const Token& prev_token,
                                              std::span<const int> allowed_ids) const {
  int pos = cache.next_position_++;
  cache.decode_steps_ += 1;
  auto logits = forward(cache, std::span<const Token>(&prev_token, 1), std::span<const int>(&pos, 1), false);
  Logits l = std::move(logits.back());
  int next_id = argmax(l, allowed_ids);
  Token next;
  next.kind = allowed_ids.empty() ? TokenKind::Prompt : TokenKind::Action;
  next.id = next_id;
  return {std::move(l), next};
}

std::vector<Logits> Decoder::full_recompute(std::span<const Token> tokens) const {
  std::vector<int> positions(tokens.size());
  std::iota(positions.begin(), positions.end(), 0);
  return full_recompute(tokens, positions);
}

std::vector<Logits> Decoder::full_recompute(std::span<const Token> tokens, std::span<const int> positions) const {
  KVCache scratch(cfg_);
  return forward(scratch, tokens, positions, true);
}

int Decoder::argmax(const Logits& logits, std::span<const int> allowed_ids) const {
  if (allowed_ids.empty()) {
    int best = 0;
    for (size_t i = 1; i < logits.values.size(); ++i) {
      if (logits.values[i] > logits.values[best]) best = static_cast<int>(i);
    }
    return best;
  }
  int best = allowed_ids[0];
  for (int id : allowed_ids) {
    if (logits.values[static_cast<size_t>(id)] > logits.values[static_cast<size_t>(best)]) best = id;
  }
  return best;
}

std::int64_t Decoder::estimate_kv_bytes(const ModelConfig& cfg, std::int64_t n_tokens, int bytes_per_scalar) {
  return 2LL * cfg.layers * cfg.heads * cfg.head_dim * n_tokens * bytes_per_scalar;
}

}  // namespace navstream
