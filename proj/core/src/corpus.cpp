#include "finelt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace finelt {

namespace {

constexpr std::string_view kPunct = ".,;:!?()\"";

bool is_punct(char c) { return kPunct.find(c) != std::string_view::npos; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const char* kReservedTokens[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

}  // namespace

std::vector<RawToken> split_tokens(std::string_view text) {
  std::vector<RawToken> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (is_punct(text[i])) {
      out.push_back({std::string(1, text[i]), i, i + 1, false});
      ++i;
      continue;
    }
    size_t j = i;
    while (j < n && !is_space(text[j]) && !is_punct(text[j])) ++j;
    out.push_back({std::string(text.substr(i, j - i)), i, j, true});
    i = j;
  }
  return out;
}

std::vector<std::string> normalized_words(std::string_view text) {
  std::vector<std::string> words;
  for (const auto& tok : split_tokens(text)) {
    if (!tok.is_word) continue;
    std::string w = tok.text;
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    words.push_back(std::move(w));
  }
  return words;
}

Vocab::Vocab() {
  for (const char* tok : kReservedTokens) add(tok);
}

Vocab Vocab::from_token_list(const std::vector<std::string>& tokens) {
  if (tokens.size() < kReservedCount) {
    throw std::runtime_error("vocab token list shorter than reserved range");
  }
  for (int i = 0; i < kReservedCount; ++i) {
    if (tokens[static_cast<size_t>(i)] != kReservedTokens[i]) {
      throw std::runtime_error("vocab token list has bad reserved tokens");
    }
  }
  Vocab v;
  for (size_t i = kReservedCount; i < tokens.size(); ++i) v.add(tokens[i]);
  return v;
}

int Vocab::add(std::string token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

int Vocab::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return tokens_[static_cast<size_t>(id)];
}

TokenizedText tokenize(std::string_view text, const Vocab& vocab) {
  TokenizedText out;
  out.raw.assign(text);
  for (const auto& tok : split_tokens(text)) {
    out.tokens.push_back(vocab.id_of(tok.text));
    out.spans.push_back({tok.begin, tok.end});
  }
  return out;
}

Vocab build_vocab(const Corpus& corpus, int min_count) {
  if (corpus.empty()) throw std::runtime_error("empty corpus");
  std::map<std::string, long> counts;
  for (const Example& ex : corpus) {
    for (const auto& tok : split_tokens(ex.source)) ++counts[tok.text];
    for (const auto& tok : split_tokens(ex.target)) ++counts[tok.text];
  }
  std::vector<std::pair<std::string, long>> ordered(counts.begin(), counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  for (auto& [token, count] : ordered) {
    if (count >= min_count) vocab.add(token);
  }
  return vocab;
}

namespace {

nlohmann::ordered_json example_to_json(const Example& ex) {
  nlohmann::ordered_json rec;
  rec["id"] = ex.id;
  rec["source"] = ex.source;
  rec["target"] = ex.target;
  rec["references"] = ex.references;
  if (ex.oracle_noisy.has_value()) rec["oracle_noisy"] = *ex.oracle_noisy;
  return rec;
}

std::string trimmed(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const Example& ex : corpus) {
    out += example_to_json(ex).dump();
    out += '\n';
  }
  return out;
}

Corpus parse_jsonl(std::string_view text) {
  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (blank) {
      if (nl == std::string_view::npos) break;
      continue;
    }

    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": malformed record");
    }
    auto require_string = [&](const char* field) -> std::string {
      if (!rec.contains(field)) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": missing field " + field);
      }
      if (!rec[field].is_string()) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": field " + field + " is not a string");
      }
      return rec[field].get<std::string>();
    };

    Example ex;
    ex.source = require_string("source");
    ex.target = require_string("target");
    if (trimmed(ex.source).empty() || trimmed(ex.target).empty()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": empty source or target");
    }
    ex.id = rec.contains("id") ? require_string("id")
                               : "line-" + std::to_string(line_no);
    if (rec.contains("references")) {
      if (!rec["references"].is_array()) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": field references is not a list");
      }
      for (const auto& r : rec["references"]) {
        if (!r.is_string()) {
          throw std::runtime_error("line " + std::to_string(line_no) +
                                   ": field references is not a list of strings");
        }
        ex.references.push_back(r.get<std::string>());
      }
    }
    if (rec.contains("oracle_noisy") && !rec["oracle_noisy"].is_null()) {
      if (!rec["oracle_noisy"].is_boolean()) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": field oracle_noisy is not a boolean");
      }
      ex.oracle_noisy = rec["oracle_noisy"].get<bool>();
    }
    if (!seen_ids.insert(ex.id).second) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": duplicate id " + ex.id);
    }
    corpus.push_back(std::move(ex));
    if (nl == std::string_view::npos) break;
  }
  return corpus;
}

Corpus load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_jsonl(corpus);
}

std::string join_tokens(const std::vector<int>& ids, const Vocab& vocab) {
  static const std::string_view kNoSpaceBefore = ".,;:!?)\"";
  std::string out;
  for (int id : ids) {
    if (id < Vocab::kReservedCount) continue;
    const std::string& tok = vocab.token_of(id);
    const bool attach =
        tok.size() == 1 && kNoSpaceBefore.find(tok[0]) != std::string_view::npos;
    if (!out.empty() && !attach && out.back() != '(') out += ' ';
    out += tok;
  }
  return out;
}

}  // namespace finelt
