#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace finelt {

/// One source/target training pair. `oracle_noisy` is ground truth recorded
/// by the synthetic generator (true iff an unsupported entity was injected
/// into the target); it is evaluation metadata and must never be read by
/// training code.
struct Example {
  std::string id;
  std::string source;
  std::string target;
  std::vector<std::string> references;
  std::optional<bool> oracle_noisy;

  bool operator==(const Example&) const = default;
};

using Corpus = std::vector<Example>;

struct TokenSpan {
  size_t begin = 0;
  size_t end = 0;

  bool operator==(const TokenSpan&) const = default;
};

/// Raw lexeme produced by the splitter: a word (maximal run of non-space,
/// non-punctuation bytes) or a single punctuation character.
struct RawToken {
  std::string text;
  size_t begin = 0;
  size_t end = 0;
  bool is_word = false;
};

/// Splits on whitespace and detaches . , ; : ! ? ( ) " as single-character
/// tokens. Offsets are byte offsets into `text`; casing rules are ASCII.
std::vector<RawToken> split_tokens(std::string_view text);

/// Lowercased word tokens of `text` (punctuation acts as a separator).
/// This is the normal form used for entity support checks.
std::vector<std::string> normalized_words(std::string_view text);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReservedCount = 4;

  Vocab();
  /// Rebuilds from a full id->token list (checkpoint load). The first four
  /// entries must be the reserved tokens.
  static Vocab from_token_list(const std::vector<std::string>& tokens);

  int add(std::string token);
  int id_of(std::string_view token) const;  // kUnk when absent
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

struct TokenizedText {
  std::vector<int> tokens;       // vocab ids, unknown words map to kUnk
  std::vector<TokenSpan> spans;  // one byte span per token
  std::string raw;
};

TokenizedText tokenize(std::string_view text, const Vocab& vocab);

/// Tokens occurring at least `min_count` times across sources and targets,
/// ordered by (count desc, token asc) after the four reserved ids.
/// Throws "empty corpus" when the corpus has no examples.
Vocab build_vocab(const Corpus& corpus, int min_count = 1);

/// JSON-Lines persistence. Records are written with a fixed field order so
/// that save(load(f)) is byte-identical; loading reports malformed lines and
/// missing fields with their 1-based line number.
Corpus load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Corpus& corpus, const std::filesystem::path& path);
std::string to_jsonl(const Corpus& corpus);
Corpus parse_jsonl(std::string_view text);

/// Renders a token-id sequence back to text (reserved ids dropped, closing
/// punctuation attached to the preceding word).
std::string join_tokens(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace finelt
