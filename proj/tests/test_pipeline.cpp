#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "finelt/cleaning.hpp"
#include "finelt/experiment.hpp"
#include "finelt/kvconfig.hpp"
#include "finelt/metrics.hpp"
#include "finelt/model.hpp"
#include "finelt/synthetic.hpp"

using namespace finelt;

TEST_CASE("standard training on noisy data reproduces the noise pattern") {
  auto data = ExperimentConfig::defaults().data;
  data.n_examples = 500;
  data.noise_rate = 0.4;
  data.seed = 7;
  const Corpus corpus = generate_synthetic(data);
  const Gazetteer gazetteer(data.terms, Gazetteer::default_stopwords());
  const Vocab vocab = build_vocab(corpus, 1);

  TrainConfig config;
  config.epochs = 3;
  config.seed = 7;
  const TrainResult trained = train(corpus, vocab, config);

  auto eval_cfg = data;
  eval_cfg.n_examples = 60;
  eval_cfg.seed = 7070;
  eval_cfg.id_prefix = "eval";
  const Corpus eval_corpus = generate_synthetic(eval_cfg);

  size_t carrier_with_unsupported = 0;
  for (const Example& ex : eval_corpus) {
    const TokenizedText src = tokenize(ex.source, vocab);
    const std::string output = join_tokens(generate(trained.params, src.tokens, 48), vocab);
    if (output.find(noise_carrier_prefix()) == std::string::npos) continue;
    if (!unsupported_entities(output, ex.source, gazetteer).empty()) {
      ++carrier_with_unsupported;
    }
  }
  CHECK(carrier_with_unsupported > 0);
}

TEST_CASE("loss truncation trace keeps roughly the configured quantile") {
  auto data = ExperimentConfig::defaults().data;
  data.n_examples = 400;
  data.noise_rate = 0.3;
  data.seed = 11;
  const Corpus corpus = generate_synthetic(data);
  const Vocab vocab = build_vocab(corpus, 1);

  TrainConfig config;
  config.epochs = 3;
  config.seed = 11;
  config.strategy = Strategy::LossTruncation;
  config.truncation.keep_quantile = 0.8;
  config.truncation.recompute_interval = 100;
  config.truncation.history_cap = 200;
  config.truncation.warmup = 100;
  const TrainResult trained = train(corpus, vocab, config);

  size_t kept = 0, counted = 0;
  for (const StepRecord& s : trained.trace.steps) {
    if (s.step < 200) continue;  // past warm-up and one full window
    ++counted;
    kept += s.kept ? 1 : 0;
  }
  const double fraction = static_cast<double>(kept) / static_cast<double>(counted);
  CHECK(fraction > 0.7);
  CHECK(fraction < 0.9);
}

TEST_CASE("fine strategy logs both the full loss and the masked score") {
  auto data = ExperimentConfig::defaults().data;
  data.n_examples = 120;
  data.noise_rate = 0.3;
  data.seed = 13;
  const Corpus corpus = generate_synthetic(data);
  const Gazetteer gazetteer(data.terms, Gazetteer::default_stopwords());
  const Vocab vocab = build_vocab(corpus, 1);

  TrainConfig config;
  config.epochs = 1;
  config.seed = 13;
  config.strategy = Strategy::FineLossTruncation;
  config.truncation.recompute_interval = 40;
  config.truncation.history_cap = 120;
  config.truncation.warmup = 40;
  const TrainResult trained = train(corpus, vocab, config, gazetteer);
  for (const StepRecord& s : trained.trace.steps) {
    CHECK(s.score <= s.nll);
    CHECK(s.score >= 0.0);
  }
  // zero-entity targets must carry a zero score
  std::set<std::string> zero_entity_ids;
  for (const Example& ex : corpus) {
    if (extract_entities(ex.target, gazetteer).empty()) zero_entity_ids.insert(ex.id);
  }
  REQUIRE(!zero_entity_ids.empty());
  for (const StepRecord& s : trained.trace.steps) {
    if (zero_entity_ids.count(s.example_id)) {
      CHECK(s.score == 0.0);
      CHECK(s.kept);
    }
  }
}

TEST_CASE("evaluating targets as outputs reproduces the label noise rate") {
  auto data = ExperimentConfig::defaults().data;
  data.n_examples = 200;
  data.noise_rate = 0.3;
  data.seed = 17;
  const Corpus corpus = generate_synthetic(data);
  const Gazetteer gazetteer(data.terms, Gazetteer::default_stopwords());

  std::vector<std::pair<std::string, std::string>> as_outputs;
  for (const Example& ex : corpus) as_outputs.emplace_back(ex.source, ex.target);
  const HRReport via_outputs = hallucination_rate(as_outputs, gazetteer);
  const HRReport via_audit = label_noise_rate(corpus, gazetteer, corpus.size());
  CHECK(via_outputs.rate == via_audit.rate);
  CHECK(via_outputs.flagged == via_audit.flagged);
}

TEST_CASE("trace dumps survive the disk round-trip for analysis") {
  auto data = ExperimentConfig::defaults().data;
  data.n_examples = 60;
  data.noise_rate = 0.3;
  data.seed = 19;
  const Corpus corpus = generate_synthetic(data);
  const Gazetteer gazetteer(data.terms, Gazetteer::default_stopwords());
  const Vocab vocab = build_vocab(corpus, 1);

  TrainConfig config;
  config.epochs = 1;
  config.seed = 19;
  config.dump_token_nlls = true;
  const TrainResult trained = train(corpus, vocab, config, gazetteer);

  const auto path = std::filesystem::temp_directory_path() / "finelt_dumps_test.json";
  save_dumps_json(trained.trace, corpus, path);
  std::vector<std::string> ids;
  const auto dumps = load_dumps_json(path, &ids);
  std::filesystem::remove(path);

  REQUIRE(dumps.size() == trained.trace.dumps.size());
  REQUIRE(ids.size() == corpus.size());
  CHECK(dumps[0].token_nlls == trained.trace.dumps[0].token_nlls);

  // the reloaded dump feeds the analyses directly
  const GroupNLLReport examples = group_nll_examples(dumps.back(), corpus);
  const GroupNLLReport tokens = group_nll_tokens(dumps.back(), corpus, gazetteer);
  CHECK(examples.find("noisy")->count + examples.find("clean")->count == corpus.size());
  CHECK(tokens.find("non_factual_entity")->count > 0);
}

TEST_CASE("untrained parameters give a flat group report") {
  auto data = ExperimentConfig::defaults().data;
  data.n_examples = 80;
  data.noise_rate = 0.3;
  data.seed = 23;
  const Corpus corpus = generate_synthetic(data);
  const Gazetteer gazetteer(data.terms, Gazetteer::default_stopwords());
  const Vocab vocab = build_vocab(corpus, 1);

  EpochNllDump dump;
  dump.epoch = 0;
  const ModelParams zeros = ModelParams::zeros({32, 64, 4}, vocab.size());
  for (const Example& ex : corpus) {
    const TokenizedText src = tokenize(ex.source, vocab);
    const TokenizedText tgt = tokenize(ex.target, vocab);
    dump.token_nlls.push_back(forward_nll(zeros, src.tokens, tgt.tokens));
  }
  const GroupNLLReport report = group_nll_tokens(dump, corpus, gazetteer);
  const double ln_v = std::log(static_cast<double>(vocab.size()));
  for (const auto& [name, stats] : report.groups) {
    if (stats.count == 0) continue;
    CHECK(stats.mean == doctest::Approx(ln_v).epsilon(1e-9));
  }
  REQUIRE(report.delta.has_value());
  CHECK(*report.delta == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("key-value config parsing, precedence helpers and hashing") {
  const KeyValueConfig config = KeyValueConfig::parse(
      "# comment\n"
      "n_examples = 50\n"
      "noise_rate = 0.25   # inline comment\n"
      "names = Ada Lovelace|Omar Haddad\n"
      "flag = true\n");
  CHECK(config.get_uint("n_examples", 0) == 50);
  CHECK(config.get_double("noise_rate", 0) == doctest::Approx(0.25));
  CHECK(config.get_bool("flag", false));
  CHECK(config.get_list("names", {}) ==
        std::vector<std::string>{"Ada Lovelace", "Omar Haddad"});
  CHECK(config.get_string("missing", "fallback") == "fallback");

  CHECK_THROWS(config.get_uint("noise_rate", 0));
  CHECK_THROWS(KeyValueConfig::parse("just a line\n"));
  CHECK_THROWS_WITH(config.require_known({"n_examples", "noise_rate", "names"}),
                    "unknown config key: flag");

  KeyValueConfig same = KeyValueConfig::parse(
      "noise_rate=0.25\nflag=true\nnames=Ada Lovelace|Omar Haddad\nn_examples=50\n");
  CHECK(same.hash() == config.hash());
  CHECK(same.canonical() == config.canonical());
}
