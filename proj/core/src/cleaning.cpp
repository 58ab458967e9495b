#include "finelt/cleaning.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace finelt {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const std::unordered_set<std::string>& abbreviation_guards() {
  static const std::unordered_set<std::string> guards = {
      "e.g.", "i.e.",  "dr.",  "mr.",  "mrs.", "ms.", "vs.", "etc.",
      "fig.", "no.",   "st.",  "jr.",  "sr.",  "prof.", "al.", "cf.",
      "ca.",  "approx."};
  return guards;
}

// The word-plus-dots chunk ending at the '.' at position p, lowercased.
std::string chunk_before(std::string_view text, size_t p) {
  size_t b = p;
  while (b > 0) {
    const char c = text[b - 1];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.') {
      --b;
    } else {
      break;
    }
  }
  std::string chunk(text.substr(b, p + 1 - b));
  std::transform(chunk.begin(), chunk.end(), chunk.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return chunk;
}

bool guarded_abbreviation(std::string_view text, size_t p) {
  const std::string chunk = chunk_before(text, p);
  if (abbreviation_guards().count(chunk) > 0) return true;
  // single-letter initials: "J. Smith"
  return chunk.size() == 2 && chunk[1] == '.' && text[p - 1] >= 'A' &&
         text[p - 1] <= 'Z';
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view to_string(CleaningMode mode) {
  return mode == CleaningMode::DropSentence ? "drop-sentence" : "drop-example";
}

std::vector<SentenceSpan> split_sentences(std::string_view text) {
  std::vector<SentenceSpan> spans;
  if (text.empty()) return spans;
  size_t start = 0;
  for (size_t p = 0; p < text.size(); ++p) {
    const char c = text[p];
    if (c != '.' && c != '!' && c != '?') continue;
    if (c == '.' && p > 0 && guarded_abbreviation(text, p)) continue;
    size_t q = p + 1;
    while (q < text.size() && is_space(text[q])) ++q;
    if (q == text.size()) break;  // final span runs to end of text below
    if (q == p + 1) continue;     // no whitespace after the terminator
    if (!(text[q] >= 'A' && text[q] <= 'Z')) continue;
    spans.push_back({start, q});
    start = q;
    p = q - 1;
  }
  spans.push_back({start, text.size()});
  return spans;
}

std::optional<Example> clean_example(const Example& example, CleaningMode mode,
                                     const Gazetteer& gazetteer,
                                     size_t* sentences_removed) {
  if (sentences_removed) *sentences_removed = 0;
  auto unsupported = unsupported_entities(example.target, example.source, gazetteer);
  if (unsupported.empty()) return example;
  if (mode == CleaningMode::DropExample) return std::nullopt;

  // Drop Sentence: delete every sentence overlapping an unsupported entity,
  // then re-check the rejoined target until it audits clean.
  std::string target = example.target;
  while (true) {
    const auto sentences = split_sentences(target);
    std::vector<std::string> kept;
    size_t dropped = 0;
    for (const SentenceSpan& s : sentences) {
      bool noisy = false;
      for (const EntitySpan& e : unsupported) {
        if (e.begin < s.end && s.begin < e.end) {
          noisy = true;
          break;
        }
      }
      if (noisy) {
        ++dropped;
      } else {
        kept.push_back(trim(std::string_view(target).substr(s.begin, s.end - s.begin)));
      }
    }
    if (sentences_removed) *sentences_removed += dropped;
    if (kept.empty()) return std::nullopt;

    std::string rejoined;
    for (const auto& s : kept) {
      if (!rejoined.empty()) rejoined += ' ';
      rejoined += s;
    }
    target = std::move(rejoined);
    unsupported = unsupported_entities(target, example.source, gazetteer);
    if (unsupported.empty()) break;
    if (dropped == 0) return std::nullopt;  // cannot make progress
  }
  Example cleaned = example;
  cleaned.target = std::move(target);
  return cleaned;
}

std::pair<Corpus, CleaningReport> clean_corpus(const Corpus& corpus,
                                               CleaningMode mode,
                                               const Gazetteer& gazetteer) {
  Corpus output;
  CleaningReport report;
  report.mode = mode;
  report.input_examples = corpus.size();
  for (const Example& ex : corpus) {
    size_t dropped = 0;
    auto cleaned = clean_example(ex, mode, gazetteer, &dropped);
    ExampleDisposition disposition;
    disposition.id = ex.id;
    disposition.sentences_removed = dropped;
    if (!cleaned.has_value()) {
      disposition.disposition = Disposition::Removed;
      ++report.examples_removed;
    } else {
      disposition.disposition = cleaned->target == ex.target
                                    ? Disposition::Kept
                                    : Disposition::Modified;
      output.push_back(std::move(*cleaned));
    }
    report.sentences_removed += dropped;
    report.log.push_back(std::move(disposition));
  }
  report.output_examples = output.size();
  return {std::move(output), std::move(report)};
}

std::string CleaningReport::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = std::string(finelt::to_string(mode));
  j["input_examples"] = input_examples;
  j["output_examples"] = output_examples;
  j["sentences_removed"] = sentences_removed;
  j["examples_removed"] = examples_removed;
  nlohmann::ordered_json log_json = nlohmann::ordered_json::array();
  for (const auto& d : log) {
    nlohmann::ordered_json rec;
    rec["id"] = d.id;
    rec["disposition"] = d.disposition == Disposition::Kept       ? "kept"
                         : d.disposition == Disposition::Modified ? "modified"
                                                                  : "removed";
    rec["sentences_removed"] = d.sentences_removed;
    log_json.push_back(std::move(rec));
  }
  j["log"] = std::move(log_json);
  return j.dump();
}

std::string CleaningReport::to_table() const {
  std::ostringstream out;
  out << "mode              " << finelt::to_string(mode) << "\n"
      << "input examples    " << input_examples << "\n"
      << "output examples   " << output_examples << "\n"
      << "examples removed  " << examples_removed << "\n"
      << "sentences removed " << sentences_removed << "\n";
  return out.str();
}

}  // namespace finelt
