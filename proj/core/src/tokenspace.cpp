#include "navstream/tokenspace.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "navstream/templates_data.hpp"

namespace navstream {

namespace {

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string substitute(std::string_view tpl, std::string_view key, std::string_view value) {
  std::string out;
  out.reserve(tpl.size() + value.size());
  size_t pos = 0;
  while (true) {
    size_t hit = tpl.find(key, pos);
    if (hit == std::string_view::npos) {
      out.append(tpl.substr(pos));
      return out;
    }
    out.append(tpl.substr(pos, hit - pos));
    out.append(value);
    pos = hit + key.size();
  }
}

std::array<std::string, 4> parse_four(std::string_view value, std::string_view key) {
  auto parts = split_ws(value);
  if (parts.size() != 4) {
    throw ConfigError("template key '" + std::string(key) + "' must list 4 entries");
  }
  return {parts[0], parts[1], parts[2], parts[3]};
}

}  // namespace

PromptTemplates PromptTemplates::parse(std::string_view text) {
  PromptTemplates t;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (line.empty() || line.front() == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("template line missing '=': " + std::string(line));
    std::string_view key = line.substr(0, eq);
    std::string_view value = line.substr(eq + 1);
    if (key == "system_prompt") {
      t.system_prompt = value;
    } else if (key == "memory_clause") {
      t.memory_clause = value;
    } else if (key == "turn_phrase") {
      t.turn_phrases.emplace_back(value);
    } else if (key == "action_symbolic") {
      t.symbolic = parse_four(value, key);
    } else if (key == "action_word") {
      t.word = parse_four(value, key);
    } else if (key == "action_phrase_forward") {
      t.phrase[0] = value;
    } else if (key == "action_phrase_left") {
      t.phrase[1] = value;
    } else if (key == "action_phrase_right") {
      t.phrase[2] = value;
    } else if (key == "action_phrase_stop") {
      t.phrase[3] = value;
    } else if (key == "instruction_words") {
      t.instruction_words = split_ws(value);
    } else {
      throw ConfigError("unknown template key: " + std::string(key));
    }
  }
  if (t.system_prompt.empty() || t.memory_clause.empty() || t.turn_phrases.empty()) {
    throw ConfigError("template file is missing required keys");
  }
  for (const auto& p : t.phrase) {
    if (split_ws(p).size() < 2) throw ConfigError("phrase actions must be at least two words: " + p);
  }
  return t;
}

PromptTemplates PromptTemplates::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open template file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates t = parse(detail::kPromptTemplatesText);
  return t;
}

std::string_view PromptTemplates::builtin_text() { return detail::kPromptTemplatesText; }

int Vocabulary::register_word(const std::string& word) {
  auto [it, inserted] = index_.try_emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

Vocabulary::Vocabulary(const PromptTemplates& templates)
    : templates_(std::make_shared<PromptTemplates>(templates)) {
  const PromptTemplates& t = *templates_;

  register_word("<patch>");
  image_slot_ = register_word("<image>");
  memory_slot_ = register_word("<memory>.");
  partition_.specials = size();

  auto add_words = [this](std::string_view text) {
    for (const auto& w : split_ws(text)) register_word(w);
  };
  add_words(substitute(t.system_prompt, "{instruction}", " "));
  add_words(substitute(t.memory_clause, "{memory}", " "));
  for (const auto& w : t.instruction_words) {
    register_word(w);
    register_word(w + ".");  // sentence-final position inside the system prompt
  }
  partition_.words = size() - partition_.specials;

  for (const auto& p : t.turn_phrases) phrase_atom_ids_.push_back(register_word(p));
  partition_.phrases = size() - partition_.specials - partition_.words;

  for (int slot = 0; slot < 4; ++slot) {
    symbolic_ids_[static_cast<size_t>(slot)] = register_word(t.symbolic[static_cast<size_t>(slot)]);
    word_ids_[static_cast<size_t>(slot)] = register_word(t.word[static_cast<size_t>(slot)]);
    for (const auto& w : split_ws(t.phrase[static_cast<size_t>(slot)])) {
      phrase_word_ids_[static_cast<size_t>(slot)].push_back(register_word(w));
    }
  }
  partition_.actions = size() - partition_.specials - partition_.words - partition_.phrases;
}

int Vocabulary::id_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) throw UnknownWord("word not in closed vocabulary: " + std::string(word));
  return it->second;
}

std::vector<Token> Vocabulary::tokenize_prompt(std::string_view text) const {
  std::vector<Token> out;
  for (const auto& w : split_ws(text)) {
    int id = id_of(w);
    Token tok;
    tok.id = id;
    tok.kind = (id == memory_slot_) ? TokenKind::Memory : TokenKind::Prompt;
    out.push_back(tok);
  }
  return out;
}

int action_slot(ActionKind a) {
  switch (a) {
    case ActionKind::MoveForward: return 0;
    case ActionKind::TurnLeft: return 1;
    case ActionKind::TurnRight: return 2;
    case ActionKind::Stop: return 3;
  }
  throw Error("invalid ActionKind");
}

namespace {
constexpr std::array<ActionKind, 4> kSlotActions = {ActionKind::MoveForward, ActionKind::TurnLeft,
                                                    ActionKind::TurnRight, ActionKind::Stop};
}

int Vocabulary::single_action_id(ActionKind a, ActionScheme s) const {
  size_t slot = static_cast<size_t>(action_slot(a));
  switch (s) {
    case ActionScheme::SymbolicSingle: return symbolic_ids_[slot];
    case ActionScheme::WordSingle: return word_ids_[slot];
    case ActionScheme::NaturalPhrase: break;
  }
  throw Error("NaturalPhrase has no single-token encoding");
}

const std::vector<int>& Vocabulary::phrase_ids(ActionKind a) const {
  return phrase_word_ids_[static_cast<size_t>(action_slot(a))];
}

int Vocabulary::turn_phrase_id(int rotation_index) const {
  return phrase_atom_ids_[static_cast<size_t>(rotation_index) % phrase_atom_ids_.size()];
}

int Vocabulary::turn_phrase_count() const { return static_cast<int>(phrase_atom_ids_.size()); }

Token make_patch_token(const Vocabulary& vocab, int frame_t, int x, int y, double depth) {
  Token tok;
  tok.kind = TokenKind::Observation;
  tok.id = vocab.patch_id();
  tok.patch = {frame_t, x, y};
  tok.depth = depth;
  return tok;
}

std::vector<Token> encode_actions(std::span<const ActionKind> actions, ActionScheme scheme,
                                  const Vocabulary& vocab) {
  std::vector<Token> out;
  for (ActionKind a : actions) {
    if (scheme == ActionScheme::NaturalPhrase) {
      for (int id : vocab.phrase_ids(a)) out.push_back(Token{TokenKind::Action, id, {}, -1.0});
    } else {
      out.push_back(Token{TokenKind::Action, vocab.single_action_id(a, scheme), {}, -1.0});
    }
  }
  return out;
}

std::vector<ActionKind> decode_actions(std::span<const Token> tokens, ActionScheme scheme,
                                       const Vocabulary& vocab) {
  std::vector<ActionKind> out;
  if (tokens.empty()) return out;
  ActionTrie trie(scheme, vocab);
  int state = trie.root();
  for (const Token& tok : tokens) {
    if (tok.kind != TokenKind::Action) {
      throw UnknownToken("non-action token in action stream: " + vocab.text(tok.id));
    }
    auto step = trie.advance(state, tok.id);
    state = step.next_state;
    if (step.completed) out.push_back(*step.completed);
  }
  if (state != trie.root()) throw UnknownToken("truncated action phrase");
  return out;
}

std::vector<Token> build_session_prompt(const std::string& instruction, int session_index,
                                        bool memory_present, const Vocabulary& vocab) {
  const PromptTemplates& t = vocab.templates();
  std::vector<Token> tokens = vocab.tokenize_prompt(substitute(t.system_prompt, "{instruction}", instruction));
  if (session_index > 0 && memory_present) {
    auto clause = vocab.tokenize_prompt(substitute(t.memory_clause, "{memory}", "<memory>"));
    tokens.insert(tokens.end(), clause.begin(), clause.end());
  }
  return tokens;
}

std::vector<Token> build_turn_prefix(int turn_index, const Vocabulary& vocab) {
  std::vector<Token> out;
  out.push_back(Token{TokenKind::Prompt, vocab.turn_phrase_id(turn_index), {}, -1.0});
  out.push_back(Token{TokenKind::Prompt, vocab.image_slot_id(), {}, -1.0});
  return out;
}

std::string detokenize(std::span<const Token> tokens, const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += vocab.text(tokens[i].id);
  }
  return out;
}

int ActionTrie::add_path(std::span<const int> ids, ActionKind a) {
  int node = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    Node& n = nodes_[static_cast<size_t>(node)];
    auto it = std::find(n.edge_ids.begin(), n.edge_ids.end(), id);
    int child;
    if (it != n.edge_ids.end()) {
      child = n.edge_nodes[static_cast<size_t>(it - n.edge_ids.begin())];
    } else {
      child = static_cast<int>(nodes_.size());
      n.edge_ids.push_back(id);
      n.edge_nodes.push_back(child);
      nodes_.emplace_back();
    }
    node = child;
  }
  nodes_[static_cast<size_t>(node)].terminal = a;
  return node;
}

ActionTrie::ActionTrie(ActionScheme scheme, const Vocabulary& vocab) {
  nodes_.emplace_back();
  for (ActionKind a : kSlotActions) {
    if (scheme == ActionScheme::NaturalPhrase) {
      add_path(vocab.phrase_ids(a), a);
    } else {
      int id = vocab.single_action_id(a, scheme);
      add_path(std::span<const int>(&id, 1), a);
    }
  }
  for (Node& n : nodes_) {
    std::vector<size_t> order(n.edge_ids.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t l, size_t r) { return n.edge_ids[l] < n.edge_ids[r]; });
    std::vector<int> ids, children;
    for (size_t k : order) {
      ids.push_back(n.edge_ids[k]);
      children.push_back(n.edge_nodes[k]);
    }
    n.edge_ids = std::move(ids);
    n.edge_nodes = std::move(children);
  }
}

std::span<const int> ActionTrie::allowed(int state) const {
  return nodes_.at(static_cast<size_t>(state)).edge_ids;
}

ActionTrie::Step ActionTrie::advance(int state, int token_id) const {
  const Node& n = nodes_.at(static_cast<size_t>(state));
  auto it = std::lower_bound(n.edge_ids.begin(), n.edge_ids.end(), token_id);
  if (it == n.edge_ids.end() || *it != token_id) {
    throw UnknownToken("token does not continue any action in this scheme");
  }
  int child = n.edge_nodes[static_cast<size_t>(it - n.edge_ids.begin())];
  const Node& c = nodes_[static_cast<size_t>(child)];
  if (c.terminal) return Step{0, c.terminal};
  return Step{child, std::nullopt};
}

}  // namespace navstream
