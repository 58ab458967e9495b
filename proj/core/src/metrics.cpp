#include "finelt/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "finelt/cleaning.hpp"

namespace finelt {

namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Hallucination rate
// ---------------------------------------------------------------------------

HRReport hallucination_rate(
    const std::vector<std::pair<std::string, std::string>>& source_and_output,
    const Gazetteer& gazetteer) {
  if (source_and_output.empty()) throw std::runtime_error("no outputs");
  HRReport report;
  report.total = source_and_output.size();
  size_t index = 0;
  for (const auto& [source, output] : source_and_output) {
    HRReport::ExampleFlag flag;
    flag.id = std::to_string(index++);
    flag.unsupported = unsupported_entities(output, source, gazetteer);
    flag.flagged = !flag.unsupported.empty();
    if (flag.flagged) ++report.flagged;
    report.per_example.push_back(std::move(flag));
  }
  report.rate =
      static_cast<double>(report.flagged) / static_cast<double>(report.total);
  return report;
}

HRReport label_noise_rate(const Corpus& corpus, const Gazetteer& gazetteer,
                          size_t first_n) {
  if (first_n > corpus.size()) {
    throw std::runtime_error("first_n exceeds corpus size");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(first_n);
  for (size_t i = 0; i < first_n; ++i) {
    pairs.emplace_back(corpus[i].source, corpus[i].target);
  }
  HRReport report = hallucination_rate(pairs, gazetteer);
  for (size_t i = 0; i < first_n; ++i) report.per_example[i].id = corpus[i].id;
  return report;
}

std::string HRReport::to_json() const {
  nlohmann::ordered_json j;
  j["flagged"] = flagged;
  j["total"] = total;
  j["rate"] = rate;
  nlohmann::ordered_json examples = nlohmann::ordered_json::array();
  for (const auto& flag : per_example) {
    nlohmann::ordered_json rec;
    rec["id"] = flag.id;
    rec["flagged"] = flag.flagged;
    nlohmann::ordered_json ents = nlohmann::ordered_json::array();
    for (const auto& e : flag.unsupported) {
      ents.push_back({{"surface", e.surface},
                      {"begin", e.begin},
                      {"end", e.end},
                      {"kind", std::string(to_string(e.kind))}});
    }
    rec["unsupported"] = std::move(ents);
    examples.push_back(std::move(rec));
  }
  j["per_example"] = std::move(examples);
  return j.dump();
}

std::string HRReport::to_csv(std::string_view manifest_line) const {
  std::string out;
  out += "# ";
  out += manifest_line;
  out += "\nid,flagged,unsupported\n";
  for (const auto& flag : per_example) {
    out += flag.id;
    out += ',';
    out += flag.flagged ? '1' : '0';
    out += ',';
    for (size_t i = 0; i < flag.unsupported.size(); ++i) {
      if (i) out += ';';
      out += flag.unsupported[i].surface;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U
// ---------------------------------------------------------------------------

namespace {

// U statistic of A against B with ties counted one half.
double pairwise_u(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  }
  return u;
}

double exact_p_value(const std::vector<double>& pooled, size_t n1, double u_obs) {
  const size_t n = pooled.size();
  std::vector<size_t> pick(n1);
  for (size_t i = 0; i < n1; ++i) pick[i] = i;
  size_t total = 0;
  size_t at_least = 0;
  while (true) {
    std::vector<double> a, b;
    a.reserve(n1);
    b.reserve(n - n1);
    std::vector<bool> in_a(n, false);
    for (size_t i : pick) in_a[i] = true;
    for (size_t i = 0; i < n; ++i) (in_a[i] ? a : b).push_back(pooled[i]);
    const double u = pairwise_u(a, b);
    ++total;
    if (u >= u_obs - 1e-12) ++at_least;

    // next combination
    size_t i = n1;
    while (i > 0) {
      --i;
      if (pick[i] != i + n - n1) {
        ++pick[i];
        for (size_t j = i + 1; j < n1; ++j) pick[j] = pick[j - 1] + 1;
        break;
      }
      if (i == 0) return static_cast<double>(at_least) / static_cast<double>(total);
    }
  }
}

double normal_approx_p_value(std::span<const double> a, std::span<const double> b,
                             double u_obs) {
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_term = 0.0;
  size_t i = 0;
  while (i < pooled.size()) {
    size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mu = n1 * n2 / 2.0;
  const double variance =
      n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (variance <= 0.0) return 0.5;  // all pooled values identical
  const double z = (u_obs - mu - 0.5) / std::sqrt(variance);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

UTestResult mann_whitney_one_sided(std::span<const double> sample_a,
                                   std::span<const double> sample_b,
                                   double alpha, UTestMethod method) {
  if (sample_a.empty() || sample_b.empty()) {
    throw std::runtime_error("empty sample");
  }
  UTestResult result;
  result.n1 = sample_a.size();
  result.n2 = sample_b.size();
  result.alpha = alpha;
  result.u = pairwise_u(sample_a, sample_b);

  bool exact = method == UTestMethod::Exact ||
               (method == UTestMethod::Auto && result.n1 + result.n2 <= 12);
  if (exact && result.n1 + result.n2 > 20) {
    throw std::runtime_error("exact enumeration infeasible for this sample size");
  }
  if (exact) {
    std::vector<double> pooled(sample_a.begin(), sample_a.end());
    pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
    result.p_value = exact_p_value(pooled, result.n1, result.u);
    result.method_used = UTestMethod::Exact;
  } else {
    result.p_value = normal_approx_p_value(sample_a, sample_b, result.u);
    result.method_used = UTestMethod::NormalApprox;
  }
  result.significant = result.p_value < alpha;
  return result;
}

// ---------------------------------------------------------------------------
// Group NLL analyses
// ---------------------------------------------------------------------------

namespace {

void append_group(GroupNLLReport& report, const std::string& name,
                  const std::vector<double>& values) {
  report.groups.emplace_back(name, GroupStats{mean_of(values), values.size()});
}

nlohmann::ordered_json utest_to_json(const UTestResult& t) {
  nlohmann::ordered_json j;
  j["u"] = t.u;
  j["n1"] = t.n1;
  j["n2"] = t.n2;
  j["p_value"] = t.p_value;
  j["alpha"] = t.alpha;
  j["significant"] = t.significant;
  j["method"] = t.method_used == UTestMethod::Exact ? "exact" : "normal_approx";
  return j;
}

}  // namespace

const GroupStats* GroupNLLReport::find(std::string_view name) const {
  for (const auto& [group, stats] : groups) {
    if (group == name) return &stats;
  }
  return nullptr;
}

std::string GroupNLLReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json groups_json = nlohmann::ordered_json::array();
  for (const auto& [name, stats] : groups) {
    groups_json.push_back(
        {{"group", name}, {"mean", stats.mean}, {"count", stats.count}});
  }
  j["groups"] = std::move(groups_json);
  j["delta_label"] = delta_label;
  if (delta.has_value()) j["delta"] = *delta; else j["delta"] = nullptr;
  if (utest.has_value()) j["utest"] = utest_to_json(*utest); else j["utest"] = nullptr;
  return j.dump();
}

std::string GroupNLLReport::to_table() const {
  std::ostringstream out;
  size_t width = 8;
  for (const auto& [name, stats] : groups) width = std::max(width, name.size());
  for (const auto& [name, stats] : groups) {
    out << name << std::string(width - name.size() + 2, ' ')
        << format_double(stats.mean) << "  (n=" << stats.count << ")\n";
  }
  if (delta.has_value()) {
    out << "delta " << delta_label << " = " << format_double(*delta);
    if (utest.has_value()) {
      out << (utest->significant ? "*" : "") << "  (p="
          << format_double(utest->p_value) << ")";
    }
    out << "\n";
  } else {
    out << "delta " << delta_label << " undefined (empty group)\n";
  }
  return out.str();
}

GroupNLLReport group_nll_examples(const EpochNllDump& dump, const Corpus& corpus,
                                  double alpha) {
  if (dump.token_nlls.size() != corpus.size()) {
    throw std::runtime_error("dump does not align with corpus");
  }
  std::vector<double> noisy, clean, unlabeled;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& nlls = dump.token_nlls[i];
    if (nlls.empty()) continue;
    const double mean_nll = mean_of(nlls);
    if (!corpus[i].oracle_noisy.has_value()) {
      unlabeled.push_back(mean_nll);
    } else if (*corpus[i].oracle_noisy) {
      noisy.push_back(mean_nll);
    } else {
      clean.push_back(mean_nll);
    }
  }
  GroupNLLReport report;
  report.delta_label = "noisy-clean";
  append_group(report, "noisy", noisy);
  append_group(report, "clean", clean);
  if (!unlabeled.empty()) append_group(report, "unlabeled", unlabeled);
  if (!noisy.empty() && !clean.empty()) {
    report.delta = mean_of(noisy) - mean_of(clean);
    report.utest = mann_whitney_one_sided(noisy, clean, alpha);
  }
  return report;
}

GroupNLLReport group_nll_tokens(const EpochNllDump& dump, const Corpus& corpus,
                                const Gazetteer& gazetteer, double alpha,
                                bool cross_sentence) {
  if (dump.token_nlls.size() != corpus.size()) {
    throw std::runtime_error("dump does not align with corpus");
  }
  std::vector<double> non_entity, factual, non_factual;
  std::vector<double> factual_in_noisy, factual_in_clean;

  for (size_t i = 0; i < corpus.size(); ++i) {
    const Example& ex = corpus[i];
    const auto tokens = split_tokens(ex.target);
    const auto& nlls = dump.token_nlls[i];
    if (nlls.size() != tokens.size()) {
      throw std::runtime_error("dump does not align with target tokens of " +
                               ex.id);
    }
    const auto entities = extract_entities(ex.target, gazetteer);
    std::vector<bool> supported(entities.size());
    bool any_unsupported = false;
    for (size_t e = 0; e < entities.size(); ++e) {
      supported[e] = is_supported(entities[e], ex.source);
      any_unsupported = any_unsupported || !supported[e];
    }
    const bool noisy_target = ex.oracle_noisy.value_or(any_unsupported);

    for (size_t t = 0; t < tokens.size(); ++t) {
      int cls = 0;  // 0: non-entity, 1: factual, 2: non-factual
      for (size_t e = 0; e < entities.size(); ++e) {
        if (tokens[t].begin < entities[e].end &&
            entities[e].begin < tokens[t].end) {
          cls = supported[e] ? 1 : 2;
          if (cls == 2) break;
        }
      }
      if (cls == 0) {
        non_entity.push_back(nlls[t]);
      } else if (cls == 2) {
        non_factual.push_back(nlls[t]);
      } else {
        factual.push_back(nlls[t]);
        (noisy_target ? factual_in_noisy : factual_in_clean).push_back(nlls[t]);
      }
    }
  }

  GroupNLLReport report;
  report.delta_label = "nonfactual-factual";
  append_group(report, "non_entity", non_entity);
  append_group(report, "non_factual_entity", non_factual);
  append_group(report, "factual_entity", factual);
  if (cross_sentence) {
    append_group(report, "factual_entity_in_noisy_target", factual_in_noisy);
    append_group(report, "factual_entity_in_clean_target", factual_in_clean);
  }
  if (!non_factual.empty() && !factual.empty()) {
    report.delta = mean_of(non_factual) - mean_of(factual);
    report.utest = mann_whitney_one_sided(non_factual, factual, alpha);
  }
  return report;
}

// ---------------------------------------------------------------------------
// ROUGE-LSum
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> sentence_tokens(const std::string& text) {
  std::vector<std::vector<std::string>> sentences;
  for (const SentenceSpan& span : split_sentences(text)) {
    auto words = normalized_words(
        std::string_view(text).substr(span.begin, span.end - span.begin));
    if (!words.empty()) sentences.push_back(std::move(words));
  }
  return sentences;
}

// Reference-side indices of one deterministic LCS backtrace.
std::vector<size_t> lcs_reference_indices(const std::vector<std::string>& ref,
                                          const std::vector<std::string>& cand) {
  const size_t nr = ref.size();
  const size_t nc = cand.size();
  std::vector<std::vector<int>> dp(nr + 1, std::vector<int>(nc + 1, 0));
  for (size_t i = 1; i <= nr; ++i) {
    for (size_t j = 1; j <= nc; ++j) {
      if (ref[i - 1] == cand[j - 1]) {
        dp[i][j] = dp[i - 1][j - 1] + 1;
      } else {
        dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
      }
    }
  }
  std::vector<size_t> indices;
  size_t i = nr, j = nc;
  while (i > 0 && j > 0) {
    if (ref[i - 1] == cand[j - 1]) {
      indices.push_back(i - 1);
      --i;
      --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  return indices;
}

double rouge_against_one(const std::vector<std::vector<std::string>>& cand,
                         const std::vector<std::vector<std::string>>& ref) {
  size_t ref_tokens = 0;
  size_t cand_tokens = 0;
  for (const auto& s : ref) ref_tokens += s.size();
  for (const auto& s : cand) cand_tokens += s.size();
  if (ref_tokens == 0 || cand_tokens == 0) return 0.0;

  size_t hits = 0;
  for (const auto& r : ref) {
    std::set<size_t> matched;
    for (const auto& c : cand) {
      for (size_t idx : lcs_reference_indices(r, c)) matched.insert(idx);
    }
    hits += matched.size();
  }
  const double precision = static_cast<double>(hits) / static_cast<double>(cand_tokens);
  const double recall = static_cast<double>(hits) / static_cast<double>(ref_tokens);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double rouge_l_sum(const std::string& candidate,
                   const std::vector<std::string>& references) {
  if (references.empty()) throw std::runtime_error("empty references");
  const auto cand = sentence_tokens(candidate);
  if (cand.empty()) return 0.0;
  double best = 0.0;
  for (const auto& reference : references) {
    best = std::max(best, rouge_against_one(cand, sentence_tokens(reference)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// SARI
// ---------------------------------------------------------------------------

namespace {

using NgramCounter = std::map<std::string, double>;

NgramCounter ngrams_of(const std::vector<std::string>& words, size_t n,
                       double scale) {
  NgramCounter counter;
  if (words.size() < n) return counter;
  for (size_t i = 0; i + n <= words.size(); ++i) {
    std::string key;
    for (size_t k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += words[i + k];
    }
    counter[key] += scale;
  }
  return counter;
}

NgramCounter intersect(const NgramCounter& a, const NgramCounter& b) {
  NgramCounter out;
  for (const auto& [key, count] : a) {
    auto it = b.find(key);
    if (it != b.end()) out[key] = std::min(count, it->second);
  }
  return out;
}

NgramCounter subtract(const NgramCounter& a, const NgramCounter& b) {
  NgramCounter out;
  for (const auto& [key, count] : a) {
    auto it = b.find(key);
    const double rest = count - (it == b.end() ? 0.0 : it->second);
    if (rest > 0.0) out[key] = rest;
  }
  return out;
}

double f_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// keep / delete / add scores for one n-gram order. Components whose
// denominator set is empty are undefined and contribute 0.
void sari_ngram(const std::vector<std::string>& src,
                const std::vector<std::string>& cand,
                const std::vector<std::vector<std::string>>& refs, size_t n,
                double& keep, double& del, double& add) {
  const double numref = static_cast<double>(refs.size());
  const NgramCounter s = ngrams_of(src, n, numref);
  const NgramCounter c = ngrams_of(cand, n, numref);
  NgramCounter r;
  for (const auto& ref : refs) {
    for (const auto& [key, count] : ngrams_of(ref, n, 1.0)) r[key] += count;
  }

  // KEEP: candidate n-grams retained from the source, scored against the
  // n-grams the references also retain.
  const NgramCounter k_rep = intersect(s, c);
  const NgramCounter k_good = intersect(k_rep, r);
  const NgramCounter k_all = intersect(s, r);
  double keep_p = 0.0;
  if (!k_rep.empty()) {
    double acc = 0.0;
    for (const auto& [key, count] : k_good) acc += count / k_rep.at(key);
    keep_p = acc / static_cast<double>(k_rep.size());
  }
  double keep_r = 0.0;
  if (!k_all.empty()) {
    double acc = 0.0;
    for (const auto& [key, count] : k_good) acc += count / k_all.at(key);
    keep_r = acc / static_cast<double>(k_all.size());
  }
  keep = f_score(keep_p, keep_r);

  // DELETE: source n-grams dropped by the candidate; precision only.
  const NgramCounter d_rep = subtract(s, c);
  const NgramCounter d_good = subtract(d_rep, r);
  del = 0.0;
  if (!d_rep.empty()) {
    double acc = 0.0;
    for (const auto& [key, count] : d_good) acc += count / d_rep.at(key);
    del = acc / static_cast<double>(d_rep.size());
  }

  // ADD: candidate n-grams absent from the source, scored against reference
  // n-grams absent from the source (set semantics).
  std::set<std::string> a_set, a_good, a_all;
  for (const auto& [key, count] : c) {
    if (s.find(key) == s.end()) a_set.insert(key);
  }
  for (const auto& key : a_set) {
    if (r.find(key) != r.end()) a_good.insert(key);
  }
  for (const auto& [key, count] : r) {
    if (s.find(key) == s.end()) a_all.insert(key);
  }
  const double add_p =
      a_set.empty() ? 0.0
                    : static_cast<double>(a_good.size()) /
                          static_cast<double>(a_set.size());
  const double add_r =
      a_all.empty() ? 0.0
                    : static_cast<double>(a_good.size()) /
                          static_cast<double>(a_all.size());
  add = (a_set.empty() && a_all.empty()) ? 0.0 : f_score(add_p, add_r);
}

}  // namespace

double sari(const std::string& source, const std::string& candidate,
            const std::vector<std::string>& references) {
  if (references.empty()) throw std::runtime_error("empty references");
  const auto src = normalized_words(source);
  const auto cand = normalized_words(candidate);
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(normalized_words(r));

  double total = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    double keep = 0.0, del = 0.0, add = 0.0;
    sari_ngram(src, cand, refs, n, keep, del, add);
    total += (keep + del + add) / 3.0;
  }
  return 100.0 * total / 4.0;
}

}  // namespace finelt
