#include "finelt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace finelt {

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  // Desk-scale truncation schedules: the stock intervals assume corpora in
  // the thousands-to-millions range, so the window is tightened to track a
  // 2000-example stream. The fine arm warms up for a full epoch so entity
  // tokens are learnable before entity scores start gating updates.
  c.lt_truncation.keep_quantile = 0.8;
  c.lt_truncation.recompute_interval = 250;
  c.lt_truncation.history_cap = 500;
  c.lt_truncation.warmup = 250;
  c.fine_truncation.keep_quantile = 0.7;
  c.fine_truncation.recompute_interval = 250;
  c.fine_truncation.history_cap = 500;
  c.fine_truncation.warmup = 250;
  // Low-entropy sources (template x name only): every distinct source
  // recurs dozens of times per epoch, so the trained noise rate per source
  // matches the corpus noise rate instead of being memorized per example.
  c.data.source_templates = {
      "{name} and colleagues examined the records of the patients .",
      "In total the women joined the study led by {name} .",
      "The team of {name} followed the adults .",
      "A trial run by {name} offered the children care .",
      "The records from the clinics were collected by {name} .",
  };
  // A smaller name pool than the stock generator: each name recurs enough
  // times in the first recompute interval that no name is still unlearned
  // when entity scores start gating updates.
  c.data.names = {"Mara Ellison", "Tomas Reyes",  "Ingrid Hale",
                  "Viktor Lund",  "Priya Nair",   "Omar Haddad",
                  "Lena Forsberg", "Daniel Okoye"};
  return c;
}

namespace {

struct ArmEval {
  double hr = 0.0;
  size_t flagged = 0;
  size_t total = 0;
  double sari_mean = 0.0;
  double rouge_mean = 0.0;
};

ArmEval evaluate_arm(const ModelParams& params, const Vocab& vocab,
                     const Corpus& eval_corpus, const Gazetteer& gazetteer,
                     size_t max_len) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(eval_corpus.size());
  double sari_sum = 0.0;
  double rouge_sum = 0.0;
  for (const Example& ex : eval_corpus) {
    const TokenizedText src = tokenize(ex.source, vocab);
    const std::vector<int> out_ids = generate(params, src.tokens, max_len);
    const std::string output = join_tokens(out_ids, vocab);
    pairs.emplace_back(ex.source, output);
    const std::vector<std::string> refs =
        ex.references.empty() ? std::vector<std::string>{ex.target} : ex.references;
    sari_sum += sari(ex.source, output, refs);
    rouge_sum += rouge_l_sum(output, refs);
  }
  const HRReport hr = hallucination_rate(pairs, gazetteer);
  ArmEval eval;
  eval.hr = hr.rate;
  eval.flagged = hr.flagged;
  eval.total = hr.total;
  eval.sari_mean = sari_sum / static_cast<double>(eval_corpus.size());
  eval.rouge_mean = rouge_sum / static_cast<double>(eval_corpus.size());
  return eval;
}

const EpochNllDump& dump_for_epoch(const TrainTrace& trace, int epoch) {
  for (const EpochNllDump& dump : trace.dumps) {
    if (dump.epoch == epoch) return dump;
  }
  throw std::runtime_error("trace has no NLL dump for epoch " +
                           std::to_string(epoch));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::ostream* progress) {
  ExperimentResult result;
  const Gazetteer gazetteer(config.data.terms, Gazetteer::default_stopwords());

  std::map<std::string, double> hr_sums;
  for (uint64_t seed : config.seeds) {
    SyntheticConfig train_cfg = config.data;
    train_cfg.n_examples = config.train_n;
    train_cfg.noise_rate = config.noise_rate;
    train_cfg.seed = seed;
    train_cfg.id_prefix = "train";
    const Corpus train_corpus = generate_synthetic(train_cfg);

    SyntheticConfig eval_cfg = train_cfg;
    eval_cfg.n_examples = config.eval_n;
    eval_cfg.seed = seed + 0x9E3779B9ull;  // independent split
    eval_cfg.id_prefix = "eval";
    const Corpus eval_corpus = generate_synthetic(eval_cfg);

    SeedSummary summary;
    summary.seed = seed;

    auto run_arm = [&](const std::string& arm, const Corpus& corpus,
                       Strategy strategy, const TruncationConfig& truncation,
                       bool dump) -> TrainResult {
      if (progress) *progress << "[seed " << seed << "] training " << arm << "\n";
      const Vocab vocab = build_vocab(corpus, 1);
      TrainConfig tc;
      tc.learning_rate = config.learning_rate;
      tc.epochs = config.epochs;
      tc.seed = seed;
      tc.strategy = strategy;
      tc.truncation = truncation;
      tc.dump_token_nlls = dump;
      tc.model = config.model;
      TrainResult trained = train(corpus, vocab, tc, gazetteer);
      const ArmEval eval =
          evaluate_arm(trained.params, vocab, eval_corpus, gazetteer,
                       config.decode_max_len);
      result.rows.push_back({arm, seed, eval.hr, eval.flagged, eval.total,
                             eval.sari_mean, eval.rouge_mean});
      summary.hr_by_arm[arm] = eval.hr;
      hr_sums[arm] += eval.hr;
      return trained;
    };

    TrainResult standard = run_arm("standard", train_corpus, Strategy::Standard,
                                   TruncationConfig{}, true);
    run_arm("lt", train_corpus, Strategy::LossTruncation, config.lt_truncation,
            false);
    run_arm("lt-fine", train_corpus, Strategy::FineLossTruncation,
            config.fine_truncation, false);

    auto [cleaned_corpus, cleaning_report] =
        clean_corpus(train_corpus, CleaningMode::DropExample, gazetteer);
    run_arm("drop-example", cleaned_corpus, Strategy::Standard,
            TruncationConfig{}, false);

    // NLL separation analysis on the standard arm after `analysis_epoch`.
    const EpochNllDump& dump =
        dump_for_epoch(standard.trace, config.analysis_epoch);
    const GroupNLLReport example_report = group_nll_examples(dump, train_corpus);
    const GroupNLLReport token_report =
        group_nll_tokens(dump, train_corpus, gazetteer);
    summary.delta_example = example_report.delta.value_or(0.0);
    summary.delta_token = token_report.delta.value_or(0.0);
    if (token_report.utest.has_value()) {
      summary.token_p_value = token_report.utest->p_value;
      summary.token_test_significant =
          token_report.utest->significant && summary.delta_token > 0.0;
    }
    summary.token_delta_dominates = summary.delta_token > summary.delta_example;

    summary.lt_below_standard =
        summary.hr_by_arm["lt"] < summary.hr_by_arm["standard"];
    summary.fine_at_most_lt =
        summary.hr_by_arm["lt-fine"] <= summary.hr_by_arm["lt"];
    summary.cleaned_below_standard =
        summary.hr_by_arm["drop-example"] < summary.hr_by_arm["standard"];

    result.seeds_lt_below_standard += summary.lt_below_standard ? 1 : 0;
    result.seeds_fine_at_most_lt += summary.fine_at_most_lt ? 1 : 0;
    result.seeds_cleaned_below_standard += summary.cleaned_below_standard ? 1 : 0;
    result.seeds_token_test_significant += summary.token_test_significant ? 1 : 0;
    result.seeds_token_delta_dominates += summary.token_delta_dominates ? 1 : 0;
    result.seeds.push_back(std::move(summary));
  }

  for (const auto& [arm, sum] : hr_sums) {
    result.mean_hr_by_arm[arm] = sum / static_cast<double>(config.seeds.size());
  }
  return result;
}

std::string ExperimentResult::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const EvalRow& row : rows) {
    rows_json.push_back({{"arm", row.arm},
                         {"seed", row.seed},
                         {"hr", row.hr},
                         {"flagged", row.flagged},
                         {"total", row.total},
                         {"sari", row.sari},
                         {"rouge_lsum", row.rouge}});
  }
  j["rows"] = std::move(rows_json);
  nlohmann::ordered_json seeds_json = nlohmann::ordered_json::array();
  for (const SeedSummary& s : seeds) {
    nlohmann::ordered_json hr_json;
    for (const auto& [arm, hr] : s.hr_by_arm) hr_json[arm] = hr;
    seeds_json.push_back({{"seed", s.seed},
                          {"hr", std::move(hr_json)},
                          {"delta_example", s.delta_example},
                          {"delta_token", s.delta_token},
                          {"token_p_value", s.token_p_value},
                          {"token_test_significant", s.token_test_significant},
                          {"lt_below_standard", s.lt_below_standard},
                          {"fine_at_most_lt", s.fine_at_most_lt},
                          {"cleaned_below_standard", s.cleaned_below_standard},
                          {"token_delta_dominates", s.token_delta_dominates}});
  }
  j["seeds"] = std::move(seeds_json);
  nlohmann::ordered_json mean_json;
  for (const auto& [arm, hr] : mean_hr_by_arm) mean_json[arm] = hr;
  j["mean_hr"] = std::move(mean_json);
  j["seeds_lt_below_standard"] = seeds_lt_below_standard;
  j["seeds_fine_at_most_lt"] = seeds_fine_at_most_lt;
  j["seeds_cleaned_below_standard"] = seeds_cleaned_below_standard;
  j["seeds_token_test_significant"] = seeds_token_test_significant;
  j["seeds_token_delta_dominates"] = seeds_token_delta_dominates;
  return j.dump(2);
}

std::string ExperimentResult::to_table() const {
  std::ostringstream out;
  out << "arm           seed        HR      SARI  ROUGE-LSum\n";
  for (const EvalRow& row : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-13s %-8llu %6.3f  %8.3f  %10.3f\n",
                  row.arm.c_str(), static_cast<unsigned long long>(row.seed),
                  row.hr, row.sari, row.rouge);
    out << line;
  }
  out << "\nmean HR by arm:\n";
  for (const auto& [arm, hr] : mean_hr_by_arm) {
    char line[80];
    std::snprintf(line, sizeof(line), "  %-13s %6.3f\n", arm.c_str(), hr);
    out << line;
  }
  return out.str();
}

}  // namespace finelt
