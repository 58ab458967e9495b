#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "finelt/cleaning.hpp"
#include "finelt/metrics.hpp"
#include "finelt/synthetic.hpp"

using namespace finelt;

namespace {

std::vector<std::string> sentence_texts(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& span : split_sentences(text)) {
    out.push_back(text.substr(span.begin, span.end - span.begin));
  }
  return out;
}

}  // namespace

TEST_CASE("sentences split on terminators followed by a capital") {
  CHECK(split_sentences("A b. C d.").size() == 2);
  CHECK(split_sentences("Dr. Smith left.").size() == 1);
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("One thing, e.g. This style.").size() == 1);
  CHECK(split_sentences("Is it? Yes! Fine.").size() == 3);
  CHECK(split_sentences("pi is 3.14 always").size() == 1);
  CHECK(split_sentences("no capital. after this").size() == 1);
}

TEST_CASE("sentence spans partition the text exactly") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 50;
  config.noise_rate = 0.5;
  config.seed = 19;
  const Corpus corpus = generate_synthetic(config);
  for (const Example& ex : corpus) {
    const auto spans = split_sentences(ex.target);
    REQUIRE(!spans.empty());
    CHECK(spans.front().begin == 0);
    CHECK(spans.back().end == ex.target.size());
    for (size_t i = 0; i + 1 < spans.size(); ++i) {
      CHECK(spans[i].end == spans[i + 1].begin);
    }
  }
}

TEST_CASE("clean examples pass through unchanged in both modes") {
  const Gazetteer gazetteer;
  Example ex{"c1", "We included six trials with 636 women.",
             "The trials included 636 women.", {}, false};
  for (CleaningMode mode : {CleaningMode::DropExample, CleaningMode::DropSentence}) {
    const auto cleaned = clean_example(ex, mode, gazetteer);
    REQUIRE(cleaned.has_value());
    CHECK(*cleaned == ex);
  }
}

TEST_CASE("an unsupported date drops a sentence or the whole example") {
  const Gazetteer gazetteer;
  Example ex{"n1", "We included six trials with 636 women.",
             "We searched on 30 May 2016. The trials included 636 women. "
             "Results were good.",
             {}, true};

  size_t dropped = 0;
  const auto kept = clean_example(ex, CleaningMode::DropSentence, gazetteer, &dropped);
  REQUIRE(kept.has_value());
  CHECK(dropped == 1);
  CHECK(kept->target == "The trials included 636 women. Results were good.");
  CHECK(sentence_texts(kept->target).size() == 2);
  CHECK(unsupported_entities(kept->target, kept->source, gazetteer).empty());

  CHECK_FALSE(clean_example(ex, CleaningMode::DropExample, gazetteer).has_value());
}

TEST_CASE("an all-noisy target is removed even in drop-sentence mode") {
  const Gazetteer gazetteer;
  Example ex{"n2", "We included six trials.", "The date was 30 May 2016.", {}, true};
  size_t dropped = 0;
  CHECK_FALSE(
      clean_example(ex, CleaningMode::DropSentence, gazetteer, &dropped).has_value());
  CHECK(dropped == 1);
}

TEST_CASE("a clean corpus is untouched") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 100;
  config.noise_rate = 0.0;
  config.seed = 23;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());
  for (CleaningMode mode : {CleaningMode::DropExample, CleaningMode::DropSentence}) {
    const auto [cleaned, report] = clean_corpus(corpus, mode, gazetteer);
    CHECK(cleaned == corpus);
    CHECK(report.examples_removed == 0);
    CHECK(report.sentences_removed == 0);
  }
}

TEST_CASE("drop-example output matches the oracle clean count") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 1000;
  config.noise_rate = 0.3;
  config.seed = 29;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());
  size_t oracle_clean = 0;
  for (const Example& ex : corpus) oracle_clean += *ex.oracle_noisy ? 0 : 1;

  const auto [cleaned, report] = clean_corpus(corpus, CleaningMode::DropExample, gazetteer);
  CHECK(cleaned.size() == oracle_clean);
  CHECK(report.sentences_removed == 0);
  for (const Example& ex : cleaned) CHECK(*ex.oracle_noisy == false);
}

TEST_CASE("cleaning is sound, idempotent, and drop-sentence retains more") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 400;
  config.noise_rate = 0.35;
  config.seed = 37;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());

  const auto [by_example, example_report] =
      clean_corpus(corpus, CleaningMode::DropExample, gazetteer);
  const auto [by_sentence, sentence_report] =
      clean_corpus(corpus, CleaningMode::DropSentence, gazetteer);

  // soundness: the cleaned corpora audit at exactly zero
  CHECK(label_noise_rate(by_example, gazetteer, by_example.size()).flagged == 0);
  CHECK(label_noise_rate(by_sentence, gazetteer, by_sentence.size()).flagged == 0);

  // containment
  CHECK(by_sentence.size() >= by_example.size());

  // idempotence
  const auto [again, again_report] =
      clean_corpus(by_sentence, CleaningMode::DropSentence, gazetteer);
  CHECK(again == by_sentence);
  CHECK(again_report.examples_removed == 0);
  CHECK(again_report.sentences_removed == 0);
}

TEST_CASE("report totals reconcile with the disposition log") {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 250;
  config.noise_rate = 0.4;
  config.seed = 41;
  const Corpus corpus = generate_synthetic(config);
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());

  for (CleaningMode mode : {CleaningMode::DropExample, CleaningMode::DropSentence}) {
    const auto [cleaned, report] = clean_corpus(corpus, mode, gazetteer);
    REQUIRE(report.log.size() == corpus.size());
    size_t removed = 0, sentences = 0;
    for (const auto& d : report.log) {
      removed += d.disposition == Disposition::Removed ? 1 : 0;
      sentences += d.sentences_removed;
    }
    CHECK(report.input_examples == corpus.size());
    CHECK(report.examples_removed == removed);
    CHECK(report.sentences_removed == sentences);
    CHECK(report.output_examples == report.input_examples - report.examples_removed);
    CHECK(report.output_examples == cleaned.size());
  }
}
