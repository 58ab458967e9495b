#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finelt/corpus.hpp"
#include "finelt/ner.hpp"

namespace finelt {

enum class CleaningMode { DropSentence, DropExample };

std::string_view to_string(CleaningMode mode);

struct SentenceSpan {
  size_t begin = 0;
  size_t end = 0;
};

/// Sentence spans partitioning `text` exactly, in order. Boundaries are
/// '.', '?' or '!' followed by whitespace and a capital (or end of text),
/// with an abbreviation guard so "Dr. Smith" or "e.g. this" do not split.
std::vector<SentenceSpan> split_sentences(std::string_view text);

enum class Disposition { Kept, Modified, Removed };

struct ExampleDisposition {
  std::string id;
  Disposition disposition = Disposition::Kept;
  size_t sentences_removed = 0;
};

struct CleaningReport {
  CleaningMode mode = CleaningMode::DropExample;
  size_t input_examples = 0;
  size_t output_examples = 0;
  size_t sentences_removed = 0;
  size_t examples_removed = 0;
  std::vector<ExampleDisposition> log;

  std::string to_json() const;
  std::string to_table() const;
};

/// Cleans one example. DropExample removes the pair when the target holds
/// any unsupported entity. DropSentence deletes offending target sentences
/// (re-checking the rejoined target until it is sound) and removes the pair
/// only when no sentence survives. Returns nullopt when removed.
std::optional<Example> clean_example(const Example& example, CleaningMode mode,
                                     const Gazetteer& gazetteer,
                                     size_t* sentences_removed = nullptr);

std::pair<Corpus, CleaningReport> clean_corpus(const Corpus& corpus,
                                               CleaningMode mode,
                                               const Gazetteer& gazetteer);

}  // namespace finelt
