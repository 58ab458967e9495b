#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "finelt/corpus.hpp"

namespace finelt {

/// Entity classes kept by the extractor. The filter is deliberately narrow
/// (dates, numbers, proper nouns, domain terms) so that support checks are
/// exact string questions, never synonym questions.
enum class EntityKind { Date, Number, Proper, Term };

std::string_view to_string(EntityKind kind);

struct EntitySpan {
  std::string surface;
  size_t begin = 0;  // byte offsets into the text the entity came from
  size_t end = 0;
  EntityKind kind = EntityKind::Proper;

  bool operator==(const EntitySpan&) const = default;
};

/// Domain term list plus a stoplist. Terms are stored lowercase-normalized;
/// entries that are stopwords are dropped. Stopwords are also excluded from
/// proper-noun detection.
class Gazetteer {
 public:
  Gazetteer();
  Gazetteer(const std::vector<std::string>& terms,
            const std::vector<std::string>& stopwords);
  static Gazetteer from_files(const std::filesystem::path& term_file,
                              const std::filesystem::path& stopword_file = {});
  static const std::vector<std::string>& default_stopwords();

  bool is_stopword(std::string_view normalized_word) const;
  /// Term token sequences, longest first (match order).
  const std::vector<std::vector<std::string>>& terms() const { return terms_; }
  size_t term_count() const { return terms_.size(); }

 private:
  std::vector<std::vector<std::string>> terms_;
  std::unordered_set<std::string> stopwords_;
};

/// Token-aligned entity mask over a tokenized target: mask[i] is true iff
/// token i overlaps an entity span (any overlap counts).
struct EntityMask {
  std::vector<bool> mask;
  std::vector<std::pair<size_t, EntitySpan>> links;  // token index -> span
};

/// All maximal non-overlapping entities of `text`, ordered by begin offset.
/// Overlapping candidates are resolved longest-match-first with
/// left-to-right tie-breaking.
std::vector<EntitySpan> extract_entities(std::string_view text,
                                         const Gazetteer& gazetteer);

/// True iff the entity's normalized surface occurs in the normalized source
/// at a word boundary.
bool is_supported(const EntitySpan& entity, std::string_view source_text);

/// Entities of `target_text` whose surface does not occur in `source_text`.
std::vector<EntitySpan> unsupported_entities(std::string_view target_text,
                                             std::string_view source_text,
                                             const Gazetteer& gazetteer);

/// Throws "span exceeds text length" when a span does not address the raw
/// text behind `tokenized`.
EntityMask entity_token_mask(const TokenizedText& tokenized,
                             const std::vector<EntitySpan>& entities);

}  // namespace finelt
