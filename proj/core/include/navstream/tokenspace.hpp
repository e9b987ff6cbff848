#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "navstream/errors.hpp"

namespace navstream {

/// Discrete agent actions. Turns rotate by exactly 15 degrees, MoveForward
/// translates by exactly 0.25 m, Stop terminates the episode.
enum class ActionKind { TurnLeft, TurnRight, MoveForward, Stop };

inline constexpr double kTurnDegrees = 15.0;
inline constexpr double kForwardMeters = 0.25;
inline constexpr int kActionsPerTurn = 4;

/// How actions are rendered as tokens: one rare symbol per action, one word
/// per action, or a multi-word natural-language phrase per action.
enum class ActionScheme { SymbolicSingle, WordSingle, NaturalPhrase };

enum class TokenKind { Prompt, Observation, Action, Memory };

/// Location of an observation patch: frame index and grid cell.
/// x is the row (0 <= x < H), y the column (0 <= y < W).
struct PatchCoord {
  int frame_t = 0;
  int x = 0;
  int y = 0;
  friend bool operator==(const PatchCoord&, const PatchCoord&) = default;
};

struct Token {
  TokenKind kind = TokenKind::Prompt;
  int id = 0;
  PatchCoord patch{};    // meaningful for Observation/Memory tokens
  double depth = -1.0;   // patch depth in meters, <= 0 when invalid
  friend bool operator==(const Token&, const Token&) = default;
};

/// The dialogue template strings. Loaded from the plain-text resource file
/// (key=value lines) that is also embedded into the library at build time.
struct PromptTemplates {
  std::string system_prompt;   // contains {instruction}
  std::string memory_clause;   // contains {memory}
  std::vector<std::string> turn_phrases;
  std::array<std::string, 4> symbolic;  // forward, left, right, stop
  std::array<std::string, 4> word;      // forward, left, right, stop
  std::array<std::string, 4> phrase;    // forward, left, right, stop
  std::vector<std::string> instruction_words;

  static PromptTemplates parse(std::string_view text);
  static PromptTemplates load_file(const std::string& path);
  /// The compiled-in copy of resources/prompt_templates.txt.
  static const PromptTemplates& builtin();
  static std::string_view builtin_text();
};

/// Closed token vocabulary built from the template strings. Word ids are
/// assigned in a fixed registration order, so the mapping is a pure function
/// of the templates.
class Vocabulary {
 public:
  explicit Vocabulary(const PromptTemplates& templates = PromptTemplates::builtin());

  int size() const { return static_cast<int>(words_.size()); }
  const std::string& text(int id) const { return words_.at(static_cast<size_t>(id)); }
  int id_of(std::string_view word) const;  // throws UnknownWord

  int patch_id() const { return kPatchId; }
  int image_slot_id() const { return image_slot_; }
  int memory_slot_id() const { return memory_slot_; }
  bool is_slot(int id) const { return id == image_slot_ || id == memory_slot_; }

  /// Whitespace tokenization against the closed vocabulary. Slot words get
  /// their slot roles; everything else is a Prompt token.
  std::vector<Token> tokenize_prompt(std::string_view text) const;

  /// Single-token id for an action under SymbolicSingle/WordSingle.
  int single_action_id(ActionKind a, ActionScheme s) const;
  /// Word-id sequence of an action's phrase under NaturalPhrase.
  const std::vector<int>& phrase_ids(ActionKind a) const;

  const PromptTemplates& templates() const { return *templates_; }

  /// Registration counts per build stage: specials / prompt+instruction
  /// words / turn-phrase atoms / action tokens. Deduplicated strings count
  /// toward their first stage.
  struct Partition {
    int specials = 0, words = 0, phrases = 0, actions = 0;
  };
  Partition partition() const { return partition_; }

  /// Vocab id of the turn phrase with the given rotation index.
  int turn_phrase_id(int rotation_index) const;
  int turn_phrase_count() const;

 private:
  static constexpr int kPatchId = 0;
  int register_word(const std::string& word);

  std::shared_ptr<const PromptTemplates> templates_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  int image_slot_ = 0;
  int memory_slot_ = 0;
  std::vector<int> phrase_atom_ids_;
  std::array<int, 4> symbolic_ids_{};  // indexed by action_slot()
  std::array<int, 4> word_ids_{};
  std::array<std::vector<int>, 4> phrase_word_ids_{};
  Partition partition_;
};

/// Index of an action in the template tables (forward, left, right, stop).
int action_slot(ActionKind a);

Token make_patch_token(const Vocabulary& vocab, int frame_t, int x, int y, double depth);

std::vector<Token> encode_actions(std::span<const ActionKind> actions, ActionScheme scheme,
                                  const Vocabulary& vocab);

/// Inverse of encode_actions. Throws UnknownToken on any token that is not
/// part of the scheme's action vocabulary (including role mismatches).
std::vector<ActionKind> decode_actions(std::span<const Token> tokens, ActionScheme scheme,
                                       const Vocabulary& vocab);

/// Session-opening prompt: the system prompt with the instruction spliced in,
/// plus the historical-observations clause (with its memory placeholder slot)
/// for every session after the first when memory exists.
std::vector<Token> build_session_prompt(const std::string& instruction, int session_index,
                                        bool memory_present, const Vocabulary& vocab);

/// Observation-introducing phrase for a turn (deterministic rotation through
/// the template phrase list) followed by the observation placeholder slot.
std::vector<Token> build_turn_prefix(int turn_index, const Vocabulary& vocab);

std::string detokenize(std::span<const Token> tokens, const Vocabulary& vocab);

/// Finite-state walker over one scheme's action tokens, used to constrain
/// greedy decoding to well-formed action sequences.
class ActionTrie {
 public:
  ActionTrie(ActionScheme scheme, const Vocabulary& vocab);

  struct Step {
    int next_state = 0;
    std::optional<ActionKind> completed;
  };

  int root() const { return 0; }
  /// Token ids that may follow `state`, in ascending id order.
  std::span<const int> allowed(int state) const;
  Step advance(int state, int token_id) const;  // throws UnknownToken

 private:
  struct Node {
    std::vector<int> edge_ids;     // sorted
    std::vector<int> edge_nodes;   // parallel to edge_ids
    std::optional<ActionKind> terminal;
  };
  int add_path(std::span<const int> ids, ActionKind a);
  std::vector<Node> nodes_;
};

}  // namespace navstream
