#include "finelt/ner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace finelt {

namespace {

const std::vector<std::string>& month_names() {
  static const std::vector<std::string> months = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return months;
}

bool is_month(std::string_view word) {
  for (const auto& m : month_names()) {
    if (word == m) return true;
  }
  return false;
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), is_digit);
}

bool is_year_token(std::string_view s) {
  if (s.size() != 4 || !all_digits(s)) return false;
  const int year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 +
                   (s[3] - '0');
  return year >= 1900 && year <= 2099;
}

bool is_day_token(std::string_view s) {
  if (s.empty() || s.size() > 2 || !all_digits(s)) return false;
  const int day = s.size() == 1 ? s[0] - '0' : (s[0] - '0') * 10 + (s[1] - '0');
  return day >= 1 && day <= 31;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

int kind_priority(EntityKind kind) {
  switch (kind) {
    case EntityKind::Date: return 0;
    case EntityKind::Number: return 1;
    case EntityKind::Proper: return 2;
    case EntityKind::Term: return 3;
  }
  return 4;
}

struct WordRef {
  size_t token_index;  // index into the full RawToken list
  size_t word_index;   // index among word tokens only
};

}  // namespace

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Date: return "DATE";
    case EntityKind::Number: return "NUMBER";
    case EntityKind::Proper: return "PROPER";
    case EntityKind::Term: return "TERM";
  }
  return "?";
}

const std::vector<std::string>& Gazetteer::default_stopwords() {
  static const std::vector<std::string> words = {
      "a",    "an",   "and",  "are",  "as",    "at",    "be",   "but",  "by",
      "for",  "from", "had",  "has",  "have",  "he",    "her",  "his",  "i",
      "if",   "in",   "into", "is",   "it",    "its",   "no",   "not",  "of",
      "on",   "or",   "our",  "she",  "so",    "that",  "the",  "their",
      "them", "then", "they", "this", "these", "those", "to",   "was",  "we",
      "were", "when", "which", "who",  "will",  "with",  "you"};
  return words;
}

Gazetteer::Gazetteer() : Gazetteer({}, default_stopwords()) {}

Gazetteer::Gazetteer(const std::vector<std::string>& terms,
                     const std::vector<std::string>& stopwords) {
  for (const auto& w : stopwords) {
    auto words = normalized_words(w);
    for (auto& nw : words) stopwords_.insert(std::move(nw));
  }
  for (const auto& term : terms) {
    auto words = normalized_words(term);
    if (words.empty()) continue;
    if (words.size() == 1 && is_stopword(words[0])) continue;  // stoplist wins
    if (std::find(terms_.begin(), terms_.end(), words) == terms_.end()) {
      terms_.push_back(std::move(words));
    }
  }
  std::sort(terms_.begin(), terms_.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });
}

Gazetteer Gazetteer::from_files(const std::filesystem::path& term_file,
                                const std::filesystem::path& stopword_file) {
  auto read_lines = [](const std::filesystem::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
        line.pop_back();
      }
      if (!line.empty()) lines.push_back(line);
    }
    return lines;
  };
  std::vector<std::string> stopwords = default_stopwords();
  if (!stopword_file.empty()) {
    for (auto& w : read_lines(stopword_file)) stopwords.push_back(std::move(w));
  }
  return Gazetteer(read_lines(term_file), stopwords);
}

bool Gazetteer::is_stopword(std::string_view normalized_word) const {
  return stopwords_.count(std::string(normalized_word)) > 0;
}

namespace {

// Date candidates over adjacent word tokens: "May 2016", "30 May 2016" and
// bare years 1900..2099.
void collect_dates(const std::vector<RawToken>& tokens,
                   std::vector<EntitySpan>& out, std::string_view text) {
  std::vector<size_t> words;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].is_word) words.push_back(i);
  }
  auto adjacent = [&](size_t wa, size_t wb) {
    return words[wb] == words[wa] + 1;  // no punctuation token between
  };
  auto push = [&](size_t from_tok, size_t to_tok) {
    const size_t b = tokens[from_tok].begin;
    const size_t e = tokens[to_tok].end;
    out.push_back({std::string(text.substr(b, e - b)), b, e, EntityKind::Date});
  };
  for (size_t w = 0; w < words.size(); ++w) {
    const std::string& s = tokens[words[w]].text;
    if (is_day_token(s) && w + 2 < words.size() && adjacent(w, w + 1) &&
        adjacent(w + 1, w + 2) && is_month(tokens[words[w + 1]].text) &&
        is_year_token(tokens[words[w + 2]].text)) {
      push(words[w], words[w + 2]);
    }
    if (is_month(s) && w + 1 < words.size() && adjacent(w, w + 1) &&
        is_year_token(tokens[words[w + 1]].text)) {
      push(words[w], words[w + 1]);
    }
    if (is_year_token(s)) {
      push(words[w], words[w]);
    }
  }
}

// Number candidates on the raw text: digit runs with optional thousands
// grouping, decimal part and trailing percent sign.
void collect_numbers(std::string_view text, std::vector<EntitySpan>& out) {
  const size_t n = text.size();
  size_t i = 0;
  while (i < n) {
    if (!is_digit(text[i]) || (i > 0 && is_alnum(text[i - 1]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < n && is_digit(text[j])) ++j;
    // thousands groups: ,ddd repeated
    while (j + 3 < n && text[j] == ',' && is_digit(text[j + 1]) &&
           is_digit(text[j + 2]) && is_digit(text[j + 3]) &&
           (j + 4 >= n || !is_digit(text[j + 4]))) {
      j += 4;
    }
    if (j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) {
      j += 1;
      while (j < n && is_digit(text[j])) ++j;
    }
    if (j < n && text[j] == '%') ++j;
    if (j < n && is_alpha(text[j])) {  // not a standalone number ("12th")
      while (j < n && is_alnum(text[j])) ++j;
      i = j;
      continue;
    }
    out.push_back(
        {std::string(text.substr(i, j - i)), i, j, EntityKind::Number});
    i = j;
  }
}

// Proper-noun candidates: maximal runs of adjacent capitalized word tokens.
// A sentence-initial token joins a run only when the same surface occurs
// capitalized mid-sentence elsewhere in the text, or when the run continues
// into a second capitalized token (clearly a name, e.g. "Storm Frank").
void collect_proper(const std::vector<RawToken>& tokens,
                    const Gazetteer& gazetteer, std::string_view text,
                    std::vector<EntitySpan>& out) {
  const size_t n = tokens.size();
  std::vector<bool> eligible(n, false);
  std::vector<bool> sentence_initial(n, false);

  bool at_sentence_start = true;
  for (size_t i = 0; i < n; ++i) {
    const RawToken& tok = tokens[i];
    if (!tok.is_word) {
      const char c = tok.text[0];
      if (c == '.' || c == '!' || c == '?') at_sentence_start = true;
      continue;  // quotes and brackets do not change sentence state
    }
    sentence_initial[i] = at_sentence_start;
    at_sentence_start = false;

    const std::string& s = tok.text;
    if (!is_upper(s[0])) continue;
    bool word_shape = true;
    for (size_t k = 1; k < s.size(); ++k) {
      if (!is_alpha(s[k]) && s[k] != '-' && s[k] != '\'') word_shape = false;
    }
    if (!word_shape) continue;
    if (gazetteer.is_stopword(lower_ascii(s))) continue;
    eligible[i] = true;
  }

  std::unordered_set<std::string> mid_sentence_surfaces;
  for (size_t i = 0; i < n; ++i) {
    if (eligible[i] && !sentence_initial[i]) {
      mid_sentence_surfaces.insert(tokens[i].text);
    }
  }

  size_t i = 0;
  while (i < n) {
    if (!eligible[i]) {
      ++i;
      continue;
    }
    if (sentence_initial[i]) {
      const bool known = mid_sentence_surfaces.count(tokens[i].text) > 0;
      const bool continues = i + 1 < n && eligible[i + 1];
      if (!known && !continues) {
        ++i;
        continue;
      }
    }
    size_t j = i;
    while (j + 1 < n && eligible[j + 1]) ++j;  // adjacency: no punct between
    const size_t b = tokens[i].begin;
    const size_t e = tokens[j].end;
    out.push_back(
        {std::string(text.substr(b, e - b)), b, e, EntityKind::Proper});
    i = j + 1;
  }
}

// Gazetteer hits over the normalized word sequence, longest entry first.
void collect_terms(const std::vector<RawToken>& tokens,
                   const Gazetteer& gazetteer, std::string_view text,
                   std::vector<EntitySpan>& out) {
  std::vector<size_t> words;
  std::vector<std::string> norm;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].is_word) continue;
    words.push_back(i);
    norm.push_back(lower_ascii(tokens[i].text));
  }
  for (size_t w = 0; w < words.size(); ++w) {
    for (const auto& term : gazetteer.terms()) {
      if (w + term.size() > words.size()) continue;
      bool hit = true;
      for (size_t k = 0; k < term.size(); ++k) {
        if (norm[w + k] != term[k]) {
          hit = false;
          break;
        }
      }
      if (hit) {
        const size_t b = tokens[words[w]].begin;
        const size_t e = tokens[words[w + term.size() - 1]].end;
        out.push_back(
            {std::string(text.substr(b, e - b)), b, e, EntityKind::Term});
        break;  // longest match at this start position (terms sorted)
      }
    }
  }
}

}  // namespace

std::vector<EntitySpan> extract_entities(std::string_view text,
                                         const Gazetteer& gazetteer) {
  const auto tokens = split_tokens(text);
  std::vector<EntitySpan> candidates;
  collect_dates(tokens, candidates, text);
  collect_numbers(text, candidates);
  collect_proper(tokens, gazetteer, text, candidates);
  collect_terms(tokens, gazetteer, text, candidates);

  std::sort(candidates.begin(), candidates.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              const size_t la = a.end - a.begin;
              const size_t lb = b.end - b.begin;
              if (la != lb) return la > lb;
              if (a.begin != b.begin) return a.begin < b.begin;
              return kind_priority(a.kind) < kind_priority(b.kind);
            });

  std::vector<EntitySpan> accepted;
  for (const EntitySpan& cand : candidates) {
    bool overlaps = false;
    for (const EntitySpan& acc : accepted) {
      if (cand.begin < acc.end && acc.begin < cand.end) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) accepted.push_back(cand);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.begin < b.begin;
            });
  return accepted;
}

bool is_supported(const EntitySpan& entity, std::string_view source_text) {
  const auto needle = normalized_words(entity.surface);
  if (needle.empty()) return true;
  const auto haystack = normalized_words(source_text);
  if (needle.size() > haystack.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (size_t k = 0; k < needle.size(); ++k) {
      if (haystack[i + k] != needle[k]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

std::vector<EntitySpan> unsupported_entities(std::string_view target_text,
                                             std::string_view source_text,
                                             const Gazetteer& gazetteer) {
  std::vector<EntitySpan> out;
  for (auto& entity : extract_entities(target_text, gazetteer)) {
    if (!is_supported(entity, source_text)) out.push_back(std::move(entity));
  }
  return out;
}

EntityMask entity_token_mask(const TokenizedText& tokenized,
                             const std::vector<EntitySpan>& entities) {
  EntityMask result;
  result.mask.assign(tokenized.tokens.size(), false);
  for (const EntitySpan& entity : entities) {
    if (entity.begin >= entity.end || entity.end > tokenized.raw.size()) {
      throw std::runtime_error("span exceeds text length");
    }
    for (size_t i = 0; i < tokenized.spans.size(); ++i) {
      const TokenSpan& span = tokenized.spans[i];
      if (span.begin < entity.end && entity.begin < span.end) {
        result.mask[i] = true;
        result.links.emplace_back(i, entity);
      }
    }
  }
  return result;
}

}  // namespace finelt
