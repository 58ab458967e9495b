#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "finelt/metrics.hpp"
#include "finelt/rng.hpp"
#include "finelt/synthetic.hpp"
#include "oracles.hpp"

using namespace finelt;

TEST_CASE("identical samples give the midpoint U") {
  const std::vector<double> a = {1, 2, 3};
  const std::vector<double> b = {1, 2, 3};
  const UTestResult result = mann_whitney_one_sided(a, b);
  CHECK(result.u == doctest::Approx(4.5));
  CHECK(result.method_used == UTestMethod::Exact);
  CHECK(result.p_value == doctest::Approx(oracles::exact_u_p_value(a, b)));
  CHECK(result.p_value > 0.45);
  CHECK_FALSE(result.significant);
}

TEST_CASE("a fully separated pair is exactly significant at 0.05") {
  const std::vector<double> a = {4, 5, 6};
  const std::vector<double> b = {1, 2, 3};
  const UTestResult result = mann_whitney_one_sided(a, b);
  CHECK(result.u == 9.0);  // maximal: n1*n2
  CHECK(result.p_value == doctest::Approx(1.0 / 20.0));  // 1 / C(6,3)
  CHECK_FALSE(result.significant);  // strict: p < alpha
}

TEST_CASE("exact p-values match the enumeration oracle with ties") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> a(2 + rng.next_below(4));
    std::vector<double> b(2 + rng.next_below(4));
    for (double& v : a) v = static_cast<double>(rng.next_below(5));
    for (double& v : b) v = static_cast<double>(rng.next_below(5));
    const UTestResult result =
        mann_whitney_one_sided(a, b, 0.05, UTestMethod::Exact);
    CHECK(result.p_value == doctest::Approx(oracles::exact_u_p_value(a, b)));
  }
}

TEST_CASE("U(A,B) + U(B,A) always equals n1*n2") {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> a(1 + rng.next_below(12));
    std::vector<double> b(1 + rng.next_below(12));
    for (double& v : a) v = static_cast<double>(rng.next_below(6));
    for (double& v : b) v = static_cast<double>(rng.next_below(6));
    const double u_ab = mann_whitney_one_sided(a, b, 0.05, UTestMethod::NormalApprox).u;
    const double u_ba = mann_whitney_one_sided(b, a, 0.05, UTestMethod::NormalApprox).u;
    CHECK(u_ab + u_ba == doctest::Approx(static_cast<double>(a.size() * b.size())));
  }
}

TEST_CASE("normal approximation tracks the exact p for n1=n2=6") {
  // continuous draws: the 0.02 band assumes tie-free samples, tie-heavy
  // decision agreement is covered by the acceptance battery
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(6), b(6);
    for (double& v : a) v = rng.next_double();
    for (double& v : b) v = rng.next_double();
    const double exact =
        mann_whitney_one_sided(a, b, 0.05, UTestMethod::Exact).p_value;
    const double approx =
        mann_whitney_one_sided(a, b, 0.05, UTestMethod::NormalApprox).p_value;
    CHECK(std::fabs(exact - approx) < 0.02);
  }
}

TEST_CASE("empty samples are rejected") {
  CHECK_THROWS_WITH(mann_whitney_one_sided({}, std::vector<double>{1.0}),
                    "empty sample");
}

TEST_CASE("large shifted samples are detected by the approximation") {
  Rng rng(9);
  std::vector<double> a(80), b(80);
  for (double& v : a) v = rng.next_double() + 0.5;
  for (double& v : b) v = rng.next_double();
  const UTestResult result = mann_whitney_one_sided(a, b);
  CHECK(result.method_used == UTestMethod::NormalApprox);
  CHECK(result.significant);
  CHECK(result.p_value < 0.001);
}

// ---------------------------------------------------------------------------
// hallucination rate
// ---------------------------------------------------------------------------

TEST_CASE("hallucination rate arithmetic: 68 flagged of 100") {
  const Gazetteer gazetteer;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 100; ++i) {
    const std::string source = "the study reported results for the group";
    std::string output = "the study reported results";
    if (i < 68) output += " current to September 2015";
    pairs.emplace_back(source, output);
  }
  const HRReport report = hallucination_rate(pairs, gazetteer);
  CHECK(report.flagged == 68);
  CHECK(report.total == 100);
  CHECK(report.rate == doctest::Approx(0.68));
}

TEST_CASE("outputs equal to their sources never hallucinate") {
  const Gazetteer gazetteer;
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.emplace_back("Storm Frank hit on 30 May 2016.", "Storm Frank hit on 30 May 2016.");
  pairs.emplace_back("all quiet here", "all quiet here");
  const HRReport report = hallucination_rate(pairs, gazetteer);
  CHECK(report.flagged == 0);
  CHECK(report.rate == 0.0);
}

TEST_CASE("hallucination rate rejects an empty batch") {
  CHECK_THROWS_WITH(hallucination_rate({}, Gazetteer()), "no outputs");
}

TEST_CASE("label noise audit equals the oracle flags") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 400;
  config.noise_rate = 0.3;
  config.seed = 47;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());

  size_t oracle_first_100 = 0;
  for (size_t i = 0; i < 100; ++i) oracle_first_100 += *corpus[i].oracle_noisy ? 1 : 0;
  const HRReport first = label_noise_rate(corpus, gazetteer, 100);
  CHECK(first.flagged == oracle_first_100);
  CHECK(first.total == 100);

  CHECK_THROWS_WITH(label_noise_rate(corpus, gazetteer, 401),
                    "first_n exceeds corpus size");
}

TEST_CASE("hallucination rate is order-invariant") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 120;
  config.noise_rate = 0.5;
  config.seed = 53;
  Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());
  const double before = label_noise_rate(corpus, gazetteer, corpus.size()).rate;
  std::reverse(corpus.begin(), corpus.end());
  CHECK(label_noise_rate(corpus, gazetteer, corpus.size()).rate == before);
}

// ---------------------------------------------------------------------------
// group NLL analyses
// ---------------------------------------------------------------------------

TEST_CASE("single-group corpora skip the test") {
  Corpus corpus;
  EpochNllDump dump;
  dump.epoch = 0;
  for (int i = 0; i < 5; ++i) {
    corpus.push_back({"c" + std::to_string(i), "src", "one two", {}, false});
    dump.token_nlls.push_back({1.0, 2.0});
  }
  const GroupNLLReport report = group_nll_examples(dump, corpus);
  CHECK_FALSE(report.delta.has_value());
  CHECK_FALSE(report.utest.has_value());
  CHECK(report.find("clean")->count == 5);
  CHECK(report.find("noisy")->count == 0);
}

TEST_CASE("a constructed +1 NLL shift is recovered and significant") {
  Corpus corpus;
  EpochNllDump dump;
  dump.epoch = 1;
  Rng rng(59);
  for (int i = 0; i < 25; ++i) {
    const double base = rng.next_in(1.0, 2.0);
    corpus.push_back({"c" + std::to_string(i), "src", "tok", {}, false});
    dump.token_nlls.push_back({base});
    corpus.push_back({"n" + std::to_string(i), "src", "tok", {}, true});
    dump.token_nlls.push_back({base + 1.0});
  }
  const GroupNLLReport report = group_nll_examples(dump, corpus);
  REQUIRE(report.delta.has_value());
  CHECK(*report.delta == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(report.utest.has_value());
  CHECK(report.utest->significant);
  CHECK(report.utest->p_value < 0.05);
}

TEST_CASE("token groups partition all target tokens") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 120;
  config.noise_rate = 0.4;
  config.seed = 61;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());

  EpochNllDump dump;
  dump.epoch = 0;
  size_t total_tokens = 0;
  for (const Example& ex : corpus) {
    const size_t n = split_tokens(ex.target).size();
    dump.token_nlls.push_back(std::vector<double>(n, 0.5));
    total_tokens += n;
  }
  const GroupNLLReport report = group_nll_tokens(dump, corpus, gazetteer);
  const size_t grouped = report.find("non_entity")->count +
                         report.find("factual_entity")->count +
                         report.find("non_factual_entity")->count;
  CHECK(grouped == total_tokens);
  const size_t factual_split = report.find("factual_entity_in_noisy_target")->count +
                               report.find("factual_entity_in_clean_target")->count;
  CHECK(factual_split == report.find("factual_entity")->count);
}

TEST_CASE("inflated injected-entity NLLs produce a significant token delta") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 150;
  config.noise_rate = 0.4;
  config.seed = 67;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());

  EpochNllDump dump;
  dump.epoch = 1;
  Rng rng(67);
  for (const Example& ex : corpus) {
    const auto tokens = split_tokens(ex.target);
    const auto entities = extract_entities(ex.target, gazetteer);
    std::vector<double> nlls(tokens.size());
    for (size_t t = 0; t < tokens.size(); ++t) {
      double v = rng.next_in(0.2, 0.6);
      for (const auto& e : entities) {
        const bool overlap = tokens[t].begin < e.end && e.begin < tokens[t].end;
        if (overlap && !is_supported(e, ex.source)) v += 2.0;
      }
      nlls[t] = v;
    }
    dump.token_nlls.push_back(std::move(nlls));
  }
  const GroupNLLReport report = group_nll_tokens(dump, corpus, gazetteer);
  REQUIRE(report.delta.has_value());
  CHECK(*report.delta == doctest::Approx(2.0).epsilon(0.15));
  CHECK(report.utest->significant);
}

TEST_CASE("corpora without entities populate only the non-entity group") {
  Corpus corpus;
  corpus.push_back({"p", "plain words here", "plain words here", {}, false});
  EpochNllDump dump;
  dump.epoch = 0;
  dump.token_nlls.push_back({0.1, 0.2, 0.3});
  const GroupNLLReport report = group_nll_tokens(dump, corpus, Gazetteer());
  CHECK(report.find("non_entity")->count == 3);
  CHECK(report.find("factual_entity")->count == 0);
  CHECK(report.find("non_factual_entity")->count == 0);
  CHECK_FALSE(report.delta.has_value());
}

// ---------------------------------------------------------------------------
// ROUGE-LSum
// ---------------------------------------------------------------------------

TEST_CASE("rouge equals one on identical text and zero on disjoint text") {
  CHECK(rouge_l_sum("The cats sat. They purred.", {"The cats sat. They purred."}) ==
        doctest::Approx(1.0));
  CHECK(rouge_l_sum("alpha beta", {"gamma delta"}) == 0.0);
  CHECK(rouge_l_sum("", {"something"}) == 0.0);
  CHECK_THROWS_WITH(rouge_l_sum("text", {}), "empty references");
}

TEST_CASE("single-sentence rouge equals the LCS F-measure oracle") {
  const std::string candidate = "a b c d";
  const std::string reference = "a c b d";
  const auto cand_tokens = normalized_words(candidate);
  const auto ref_tokens = normalized_words(reference);
  const double lcs = static_cast<double>(oracles::lcs_length(cand_tokens, ref_tokens));
  const double p = lcs / static_cast<double>(cand_tokens.size());
  const double r = lcs / static_cast<double>(ref_tokens.size());
  const double expected = 2.0 * p * r / (p + r);
  CHECK(rouge_l_sum(candidate, {reference}) == doctest::Approx(expected));
  CHECK(expected == doctest::Approx(0.75));
}

TEST_CASE("summary-level rouge is insensitive to sentence order") {
  const std::string a = "Alpha beta gamma. Delta epsilon.";
  const std::string b = "Delta epsilon. Alpha beta gamma.";
  CHECK(rouge_l_sum(a, {b}) == doctest::Approx(1.0));
}

TEST_CASE("rouge takes the best reference") {
  const double best = rouge_l_sum("a b c", {"x y z", "a b c"});
  CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("rouge stays within bounds on generated text") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 40;
  config.seed = 71;
  const Corpus corpus = generate_synthetic(config);
  for (size_t i = 1; i < corpus.size(); ++i) {
    const double score = rouge_l_sum(corpus[i - 1].target, {corpus[i].target});
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
  }
}

// ---------------------------------------------------------------------------
// SARI
// ---------------------------------------------------------------------------

TEST_CASE("sari degenerate case: candidate equals source equals reference") {
  // Every n-gram is kept and confirmed by the reference, so keep = 1 at each
  // n; nothing is added or deleted, so those components are undefined and
  // contribute 0. SARI = 100 * (1 + 0 + 0) / 3.
  const std::string text = "the visit went well today";
  CHECK(sari(text, text, {text}) == doctest::Approx(100.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("sari micro case: source 'a b', reference 'a c', candidate 'a c'") {
  // n=1: keep: kept {a} confirmed -> P=R=1, F=1; delete: dropped {b} and the
  //      reference drops it too -> 1; add: added {c}, reference adds it -> 1.
  //      score 1.
  // n=2: keep: kept bigrams {} -> 0; delete: dropped {a b}, confirmed -> 1;
  //      add: added {a c}, confirmed -> 1. score 2/3.
  // n=3, n=4: no n-grams anywhere -> 0.
  // SARI = 100 * (1 + 2/3 + 0 + 0) / 4 = 41.666...
  CHECK(sari("a b", "a c", {"a c"}) == doctest::Approx(125.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("sari micro case: source 'a b c', candidate 'a b d', reference 'a d c'") {
  // n=1: keep: kept {a,b}, confirmed {a}; P = 1/2, R over keepable {a,c} =
  //      1/2, F = 1/2. delete: dropped {c} but the reference keeps c -> 0.
  //      add: added {d}, confirmed -> 1. score (1/2 + 0 + 1)/3 = 1/2.
  // n=2: keep: kept {ab}, confirmed none -> 0. delete: dropped {bc},
  //      confirmed -> 1. add: added {bd}, not in reference -> 0. score 1/3.
  // n=3: keep 0; delete {abc} confirmed -> 1; add {abd} unconfirmed -> 0.
  //      score 1/3.
  // n=4: empty everywhere -> 0.
  // SARI = 100 * (1/2 + 1/3 + 1/3 + 0) / 4 = 100 * 7/24.
  CHECK(sari("a b c", "a b d", {"a d c"}) ==
        doctest::Approx(100.0 * 7.0 / 24.0).epsilon(1e-9));
}

TEST_CASE("a candidate sharing nothing with source or references scores zero") {
  CHECK(sari("a b", "x y", {"a b"}) == doctest::Approx(0.0));
}

TEST_CASE("sari is deterministic and invariant to duplicated references") {
  const std::string src = "the cat sat on the mat";
  const std::string cand = "the cat rested on the mat";
  const std::string ref = "a cat rested on a mat";
  const double once = sari(src, cand, {ref});
  CHECK(sari(src, cand, {ref}) == once);
  CHECK(sari(src, cand, {ref, ref}) == doctest::Approx(once).epsilon(1e-12));
  CHECK(once >= 0.0);
  CHECK(once <= 100.0);
}

TEST_CASE("sari rejects an empty reference list") {
  CHECK_THROWS_WITH(sari("a", "a", {}), "empty references");
}
