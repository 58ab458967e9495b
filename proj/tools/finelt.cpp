// finelt: synthetic noisy-corpus generation, entity-aware corpus cleaning,
// loss-truncation training of a small conditional language model, and
// hallucination/fluency evaluation. Subcommands:
//   generate | clean | train | evaluate | analyze | experiment

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "finelt/cleaning.hpp"
#include "finelt/corpus.hpp"
#include "finelt/experiment.hpp"
#include "finelt/kvconfig.hpp"
#include "finelt/metrics.hpp"
#include "finelt/model.hpp"
#include "finelt/ner.hpp"
#include "finelt/synthetic.hpp"
#include "finelt/truncation.hpp"
#include "finelt/version.hpp"

namespace fs = std::filesystem;
using namespace finelt;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is required");
  if (!fs::exists(path)) {
    throw ConfigError(what + " not found: " + path.string());
  }
}

std::string hex_hash(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_line(uint64_t seed, const KeyValueConfig& config) {
  return std::string("finelt ") + kVersion + " seed=" + std::to_string(seed) +
         " config=" + hex_hash(config.hash());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Gazetteer load_gazetteer(const fs::path& term_file, const fs::path& stopword_file,
                         const KeyValueConfig& file_config) {
  if (!term_file.empty()) {
    require_input_file(term_file, "gazetteer file");
    if (!stopword_file.empty()) {
      require_input_file(stopword_file, "stopword file");
    }
    return Gazetteer::from_files(term_file, stopword_file);
  }
  // fall back to the configured term pool so audits see the same terms the
  // generator used
  return Gazetteer(file_config.get_list("terms", SyntheticConfig::defaults().terms),
                   Gazetteer::default_stopwords());
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config_path;
  std::string out = "corpus.jsonl";
  std::string gazetteer_out;
  uint64_t seed = 0;
  bool seed_given = false;
  long n = -1;
  double noise_rate = -1.0;
};

int cmd_generate(const GenerateArgs& args) {
  KeyValueConfig file_config;
  if (!args.config_path.empty()) {
    require_input_file(args.config_path, "config file");
    file_config = KeyValueConfig::parse_file(args.config_path);
    file_config.require_known({"n_examples", "noise_rate", "seed", "id_prefix",
                               "names", "dates", "numbers", "terms",
                               "source_templates", "target_templates", "target_closers"});
  }
  SyntheticConfig defaults = SyntheticConfig::defaults();
  SyntheticConfig config = defaults;
  config.n_examples = file_config.get_uint("n_examples", defaults.n_examples);
  config.noise_rate = file_config.get_double("noise_rate", defaults.noise_rate);
  config.seed = file_config.get_uint("seed", 1);
  config.id_prefix = file_config.get_string("id_prefix", defaults.id_prefix);
  config.names = file_config.get_list("names", defaults.names);
  config.dates = file_config.get_list("dates", defaults.dates);
  config.numbers = file_config.get_list("numbers", defaults.numbers);
  config.terms = file_config.get_list("terms", defaults.terms);
  config.source_templates =
      file_config.get_list("source_templates", defaults.source_templates);
  config.target_templates =
      file_config.get_list("target_templates", defaults.target_templates);
  config.target_closers =
      file_config.get_list("target_closers", defaults.target_closers);
  if (args.seed_given) config.seed = args.seed;
  if (args.n >= 0) config.n_examples = static_cast<size_t>(args.n);
  if (args.noise_rate >= -0.5) config.noise_rate = args.noise_rate;

  try {
    config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  KeyValueConfig effective = file_config;
  effective.set("n_examples", std::to_string(config.n_examples));
  effective.set("noise_rate", std::to_string(config.noise_rate));
  effective.set("seed", std::to_string(config.seed));

  const Corpus corpus = generate_synthetic(config);
  save_jsonl(corpus, args.out);

  size_t noisy = 0;
  for (const Example& ex : corpus) noisy += ex.oracle_noisy.value_or(false) ? 1 : 0;

  nlohmann::ordered_json manifest;
  manifest["tool"] = "finelt";
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  manifest["noise_rate"] = config.noise_rate;
  manifest["n_examples"] = config.n_examples;
  manifest["noisy_examples"] = noisy;
  manifest["clean_examples"] = corpus.size() - noisy;
  manifest["config_hash"] = hex_hash(effective.hash());
  write_text(fs::path(args.out).string() + ".manifest.json", manifest.dump(2) + "\n");

  if (!args.gazetteer_out.empty()) {
    std::string lines;
    for (const auto& term : config.terms) lines += term + "\n";
    write_text(args.gazetteer_out, lines);
  }
  std::cout << "wrote " << corpus.size() << " examples (" << noisy
            << " noisy) to " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// clean
// ---------------------------------------------------------------------------

struct CleanArgs {
  std::string in;
  std::string out = "cleaned.jsonl";
  std::string mode = "drop-example";
  std::string gazetteer;
  std::string stopwords;
  std::string report_out;
  std::string format = "table";
};

int cmd_clean(const CleanArgs& args) {
  require_input_file(args.in, "input corpus");
  CleaningMode mode;
  if (args.mode == "drop-example") mode = CleaningMode::DropExample;
  else if (args.mode == "drop-sentence") mode = CleaningMode::DropSentence;
  else throw ConfigError("unknown cleaning mode: " + args.mode);

  const Corpus corpus = load_jsonl(args.in);
  const Gazetteer gazetteer = load_gazetteer(args.gazetteer, args.stopwords, {});
  auto [cleaned, report] = clean_corpus(corpus, mode, gazetteer);
  save_jsonl(cleaned, args.out);
  const std::string report_path =
      args.report_out.empty() ? args.out + ".report.json" : args.report_out;
  write_text(report_path, report.to_json() + "\n");
  if (args.format == "json") {
    std::cout << report.to_json() << "\n";
  } else {
    std::cout << report.to_table();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::string in;
  std::string out = "model.ckpt.json";
  std::string strategy = "standard";
  bool strategy_given = false;
  std::string gazetteer;
  std::string stopwords;
  uint64_t seed = 0;
  bool seed_given = false;
  long epochs = -1;
  double lr = -1.0;
  double keep_quantile = -1.0;
  long recompute_interval = -1;
  long history_cap = -1;
  long warmup = -1;
  long min_count = -1;
  bool dump_nlls = false;
  long log_every = -1;
};

int cmd_train(const TrainArgs& args) {
  require_input_file(args.in, "input corpus");
  KeyValueConfig file_config;
  if (!args.config_path.empty()) {
    require_input_file(args.config_path, "config file");
    file_config = KeyValueConfig::parse_file(args.config_path);
    file_config.require_known({"strategy", "seed", "epochs", "learning_rate",
                               "keep_quantile", "recompute_interval",
                               "history_cap", "warmup", "min_count",
                               "dump_token_nlls", "log_every", "embed_dim",
                               "hidden_dim", "context"});
  }

  TrainConfig config;
  config.strategy = strategy_from_string(
      args.strategy_given ? args.strategy
                          : file_config.get_string("strategy", args.strategy));
  config.seed = args.seed_given ? args.seed : file_config.get_uint("seed", 1);
  config.epochs = args.epochs > 0
                      ? static_cast<int>(args.epochs)
                      : static_cast<int>(file_config.get_int("epochs", 3));
  config.learning_rate =
      args.lr > 0 ? args.lr : file_config.get_double("learning_rate", 0.1);
  config.truncation.keep_quantile =
      args.keep_quantile > 0 ? args.keep_quantile
                             : file_config.get_double("keep_quantile", 0.8);
  config.truncation.recompute_interval =
      args.recompute_interval > 0
          ? static_cast<size_t>(args.recompute_interval)
          : file_config.get_uint("recompute_interval", 1000);
  config.truncation.history_cap =
      args.history_cap > 0 ? static_cast<size_t>(args.history_cap)
                           : file_config.get_uint(
                                 "history_cap",
                                 10 * config.truncation.recompute_interval);
  config.truncation.warmup =
      args.warmup >= 0 ? static_cast<size_t>(args.warmup)
                       : file_config.get_uint("warmup",
                                              config.truncation.recompute_interval);
  config.dump_token_nlls =
      args.dump_nlls || file_config.get_bool("dump_token_nlls", false);
  config.log_every = args.log_every >= 0
                         ? static_cast<int>(args.log_every)
                         : static_cast<int>(file_config.get_int("log_every", 0));
  config.model.embed_dim = static_cast<int>(file_config.get_int("embed_dim", 32));
  config.model.hidden_dim =
      static_cast<int>(file_config.get_int("hidden_dim", 64));
  config.model.context = static_cast<int>(file_config.get_int("context", 4));
  const int min_count =
      args.min_count > 0 ? static_cast<int>(args.min_count)
                         : static_cast<int>(file_config.get_int("min_count", 1));

  try {
    config.truncation.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  KeyValueConfig effective = file_config;
  effective.set("strategy", std::string(to_string(config.strategy)));
  effective.set("seed", std::to_string(config.seed));
  effective.set("epochs", std::to_string(config.epochs));
  effective.set("keep_quantile", std::to_string(config.truncation.keep_quantile));
  effective.set("recompute_interval",
                std::to_string(config.truncation.recompute_interval));

  const Corpus corpus = load_jsonl(args.in);
  const Gazetteer gazetteer = load_gazetteer(args.gazetteer, args.stopwords, {});
  const Vocab vocab = build_vocab(corpus, min_count);
  const TrainResult result = train(corpus, vocab, config, gazetteer, nullptr,
                                   config.log_every > 0 ? &std::cout : nullptr);

  save_checkpoint(result.params, vocab, args.out);
  const std::string stem = args.out;
  save_trace_csv(result.trace, manifest_line(config.seed, effective),
                 stem + ".trace.csv");
  if (config.dump_token_nlls) {
    save_dumps_json(result.trace, corpus, stem + ".dumps.json");
  }
  size_t kept = 0;
  for (const StepRecord& s : result.trace.steps) kept += s.kept ? 1 : 0;
  std::cout << "trained " << to_string(config.strategy) << " for "
            << config.epochs << " epochs over " << corpus.size()
            << " examples; kept " << kept << "/" << result.trace.steps.size()
            << " steps; checkpoint " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string in;
  std::vector<std::string> models;
  bool identity = false;
  bool references = false;
  std::string gazetteer;
  std::string stopwords;
  std::string out;
  std::string format = "table";
  long max_len = 48;
  uint64_t seed = 0;
};

struct EvalReportRow {
  std::string arm;
  double hr;
  size_t flagged;
  size_t total;
  double sari_mean;
  double rouge_mean;
  HRReport hr_report;
};

int cmd_evaluate(const EvaluateArgs& args) {
  require_input_file(args.in, "eval corpus");
  if (args.models.empty() && !args.identity && !args.references) {
    throw ConfigError("nothing to evaluate: pass --model, --identity or --references");
  }
  for (const auto& m : args.models) require_input_file(m, "model checkpoint");

  const Corpus corpus = load_jsonl(args.in);
  if (corpus.empty()) throw ConfigError("eval corpus is empty");
  const Gazetteer gazetteer = load_gazetteer(args.gazetteer, args.stopwords, {});

  auto score_outputs =
      [&](const std::string& arm,
          const std::vector<std::string>& outputs) -> EvalReportRow {
    std::vector<std::pair<std::string, std::string>> pairs;
    double sari_sum = 0.0;
    double rouge_sum = 0.0;
    for (size_t i = 0; i < corpus.size(); ++i) {
      const Example& ex = corpus[i];
      pairs.emplace_back(ex.source, outputs[i]);
      const std::vector<std::string> refs =
          ex.references.empty() ? std::vector<std::string>{ex.target}
                                : ex.references;
      sari_sum += sari(ex.source, outputs[i], refs);
      rouge_sum += rouge_l_sum(outputs[i], refs);
    }
    HRReport hr = hallucination_rate(pairs, gazetteer);
    for (size_t i = 0; i < corpus.size(); ++i) hr.per_example[i].id = corpus[i].id;
    return {arm,
            hr.rate,
            hr.flagged,
            hr.total,
            sari_sum / static_cast<double>(corpus.size()),
            rouge_sum / static_cast<double>(corpus.size()),
            std::move(hr)};
  };

  std::vector<EvalReportRow> rows;
  if (args.identity) {
    std::vector<std::string> outputs;
    for (const Example& ex : corpus) outputs.push_back(ex.source);
    rows.push_back(score_outputs("identity", outputs));
  }
  if (args.references) {
    std::vector<std::string> outputs;
    for (const Example& ex : corpus) outputs.push_back(ex.target);
    rows.push_back(score_outputs("references", outputs));
  }
  for (const auto& model_path : args.models) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    std::vector<std::string> outputs;
    outputs.reserve(corpus.size());
    for (const Example& ex : corpus) {
      const TokenizedText src = tokenize(ex.source, ckpt.vocab);
      const std::vector<int> ids =
          generate(ckpt.params, src.tokens, static_cast<size_t>(args.max_len));
      outputs.push_back(join_tokens(ids, ckpt.vocab));
    }
    rows.push_back(score_outputs(fs::path(model_path).stem().string(), outputs));
  }

  KeyValueConfig effective;
  effective.set("max_len", std::to_string(args.max_len));
  effective.set("arms", std::to_string(rows.size()));
  const std::string manifest = manifest_line(args.seed, effective);

  std::string csv = "# " + manifest + "\narm,hr,flagged,total,sari,rouge_lsum\n";
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  std::ostringstream table;
  table << "arm              HR  flagged/total      SARI  ROUGE-LSum\n";
  for (const EvalReportRow& row : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%zu,%zu,%.6f,%.6f\n",
                  row.arm.c_str(), row.hr, row.flagged, row.total,
                  row.sari_mean, row.rouge_mean);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "%-13s %6.3f  %6zu/%-6zu  %8.3f  %10.3f\n",
                  row.arm.c_str(), row.hr, row.flagged, row.total, row.sari_mean,
                  row.rouge_mean);
    table << buf;
    rows_json.push_back({{"arm", row.arm},
                         {"hr", row.hr},
                         {"flagged", row.flagged},
                         {"total", row.total},
                         {"sari", row.sari_mean},
                         {"rouge_lsum", row.rouge_mean}});
  }
  if (!args.out.empty()) {
    write_text(args.out + ".csv", csv);
    nlohmann::ordered_json j;
    j["manifest"] = manifest;
    j["rows"] = std::move(rows_json);
    write_text(args.out + ".json", j.dump(2) + "\n");
    for (const EvalReportRow& row : rows) {  // per-example flags for inspection
      write_text(args.out + ".flags-" + row.arm + ".csv",
                 row.hr_report.to_csv(manifest));
    }
  }
  if (args.format == "csv") std::cout << csv;
  else if (args.format == "json") {
    nlohmann::ordered_json j;
    j["manifest"] = manifest;
    j["rows"] = rows_json;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << table.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string dumps;
  std::string in;
  std::string gazetteer;
  std::string stopwords;
  std::string out;
  std::string format = "table";
  long epoch = -1;
  double alpha = 0.05;
};

int cmd_analyze(const AnalyzeArgs& args) {
  require_input_file(args.dumps, "dumps file");
  require_input_file(args.in, "train corpus");
  const Corpus corpus = load_jsonl(args.in);
  const Gazetteer gazetteer = load_gazetteer(args.gazetteer, args.stopwords, {});

  std::vector<std::string> ids;
  const std::vector<EpochNllDump> dumps = load_dumps_json(args.dumps, &ids);
  if (ids.size() != corpus.size()) {
    throw ConfigError("dumps were made for a different corpus (size mismatch)");
  }
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != corpus[i].id) {
      throw ConfigError("dumps were made for a different corpus (id mismatch at " +
                        std::to_string(i) + ")");
    }
  }

  nlohmann::ordered_json epochs_json = nlohmann::ordered_json::array();
  std::ostringstream table;
  for (const EpochNllDump& dump : dumps) {
    if (args.epoch >= 0 && dump.epoch != args.epoch) continue;
    const GroupNLLReport examples = group_nll_examples(dump, corpus, args.alpha);
    const GroupNLLReport tokens =
        group_nll_tokens(dump, corpus, gazetteer, args.alpha);

    nlohmann::ordered_json entry;
    entry["epoch"] = dump.epoch;
    entry["example_level"] = nlohmann::ordered_json::parse(examples.to_json());
    entry["token_level"] = nlohmann::ordered_json::parse(tokens.to_json());
    epochs_json.push_back(std::move(entry));

    table << "== epoch " << dump.epoch << " ==\n"
          << "example level (mean NLL per example):\n"
          << examples.to_table() << "token level (mean NLL per token):\n"
          << tokens.to_table() << "\n";
  }
  if (epochs_json.empty()) {
    throw ConfigError("no matching epoch in dumps file");
  }

  nlohmann::ordered_json j;
  j["alpha"] = args.alpha;
  j["epochs"] = std::move(epochs_json);
  if (!args.out.empty()) write_text(args.out, j.dump(2) + "\n");
  if (args.format == "json") std::cout << j.dump(2) << "\n";
  else std::cout << table.str();
  return 0;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string config_path;
  std::string out_dir = "experiment";
  bool quiet = false;
};

int cmd_experiment(const ExperimentArgs& args) {
  KeyValueConfig file_config;
  if (!args.config_path.empty()) {
    require_input_file(args.config_path, "config file");
    file_config = KeyValueConfig::parse_file(args.config_path);
    file_config.require_known(
        {"train_n", "eval_n", "noise_rate", "seeds", "epochs", "learning_rate",
         "analysis_epoch", "decode_max_len", "lt_keep_quantile",
         "lt_recompute_interval", "lt_history_cap", "lt_warmup",
         "fine_keep_quantile", "fine_recompute_interval", "fine_history_cap",
         "fine_warmup", "names", "dates", "numbers", "terms",
         "source_templates", "target_templates", "target_closers"});
  }
  ExperimentConfig config = ExperimentConfig::defaults();
  config.train_n = file_config.get_uint("train_n", config.train_n);
  config.eval_n = file_config.get_uint("eval_n", config.eval_n);
  config.noise_rate = file_config.get_double("noise_rate", config.noise_rate);
  config.epochs = static_cast<int>(file_config.get_int("epochs", config.epochs));
  config.learning_rate =
      file_config.get_double("learning_rate", config.learning_rate);
  config.analysis_epoch =
      static_cast<int>(file_config.get_int("analysis_epoch", config.analysis_epoch));
  config.decode_max_len =
      file_config.get_uint("decode_max_len", config.decode_max_len);
  if (file_config.contains("seeds")) {
    config.seeds.clear();
    for (const auto& s : file_config.get_list("seeds", {})) {
      config.seeds.push_back(std::stoull(s));
    }
  }
  auto merge_trunc = [&](TruncationConfig& t, const std::string& prefix) {
    t.keep_quantile =
        file_config.get_double(prefix + "_keep_quantile", t.keep_quantile);
    t.recompute_interval =
        file_config.get_uint(prefix + "_recompute_interval", t.recompute_interval);
    t.history_cap = file_config.get_uint(prefix + "_history_cap", t.history_cap);
    t.warmup = file_config.get_uint(prefix + "_warmup", t.warmup);
  };
  merge_trunc(config.lt_truncation, "lt");
  merge_trunc(config.fine_truncation, "fine");
  config.data.names = file_config.get_list("names", config.data.names);
  config.data.dates = file_config.get_list("dates", config.data.dates);
  config.data.numbers = file_config.get_list("numbers", config.data.numbers);
  config.data.terms = file_config.get_list("terms", config.data.terms);
  config.data.source_templates =
      file_config.get_list("source_templates", config.data.source_templates);
  config.data.target_templates =
      file_config.get_list("target_templates", config.data.target_templates);
  config.data.target_closers =
      file_config.get_list("target_closers", config.data.target_closers);

  try {
    config.data.validate();
    config.lt_truncation.validate();
    config.fine_truncation.validate();
    if (config.seeds.empty()) throw std::runtime_error("no seeds configured");
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  fs::create_directories(args.out_dir);
  const ExperimentResult result =
      run_experiment(config, args.quiet ? nullptr : &std::cerr);
  write_text(fs::path(args.out_dir) / "experiment.json", result.to_json() + "\n");
  write_text(fs::path(args.out_dir) / "experiment.txt", result.to_table());
  std::cout << result.to_table();
  std::cout << "orderings (seeds holding / total):\n"
            << "  HR(lt) < HR(standard):          " << result.seeds_lt_below_standard
            << "/" << config.seeds.size() << "\n"
            << "  HR(lt-fine) <= HR(lt):          " << result.seeds_fine_at_most_lt
            << "/" << config.seeds.size() << "\n"
            << "  HR(drop-example) < HR(standard): "
            << result.seeds_cleaned_below_standard << "/" << config.seeds.size()
            << "\n"
            << "  token delta significant:         "
            << result.seeds_token_test_significant << "/" << config.seeds.size()
            << "\n"
            << "  token delta > example delta:     "
            << result.seeds_token_delta_dominates << "/" << config.seeds.size()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise-robust training toolkit for conditional text generation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("finelt ") + kVersion);

  GenerateArgs gen;
  auto* generate_cmd =
      app.add_subcommand("generate", "generate a synthetic noisy corpus");
  generate_cmd->add_option("--config", gen.config_path, "flat key=value config file");
  generate_cmd->add_option("--out", gen.out, "output corpus path (JSON-Lines)");
  generate_cmd->add_option("--emit-gazetteer", gen.gazetteer_out,
                           "also write the term pool as a gazetteer file");
  auto* gen_seed = generate_cmd->add_option("--seed", gen.seed, "generator seed");
  generate_cmd->add_option("--n", gen.n, "number of examples");
  generate_cmd->add_option("--noise-rate", gen.noise_rate,
                           "probability of injecting an unsupported entity");

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "remove noisy targets from a corpus");
  clean_cmd->add_option("--in", clean.in, "input corpus")->required();
  clean_cmd->add_option("--out", clean.out, "cleaned corpus path");
  clean_cmd->add_option("--mode", clean.mode, "drop-sentence | drop-example");
  clean_cmd->add_option("--gazetteer", clean.gazetteer, "term file, one per line");
  clean_cmd->add_option("--stopwords", clean.stopwords, "stopword file");
  clean_cmd->add_option("--report", clean.report_out, "cleaning report path (JSON)");
  clean_cmd->add_option("--format", clean.format, "stdout format: table | json");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the conditional LM");
  train_cmd->add_option("--config", train_args.config_path, "flat key=value config");
  train_cmd->add_option("--in", train_args.in, "training corpus")->required();
  train_cmd->add_option("--out", train_args.out, "checkpoint path");
  auto* train_strategy = train_cmd->add_option("--strategy", train_args.strategy,
                                               "standard | lt | lt-fine | none");
  auto* train_seed = train_cmd->add_option("--seed", train_args.seed, "run seed");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--lr", train_args.lr, "learning rate");
  train_cmd->add_option("--keep-quantile", train_args.keep_quantile,
                        "truncation keep quantile in (0,1]");
  train_cmd->add_option("--recompute-interval", train_args.recompute_interval,
                        "examples between cutoff recomputes");
  train_cmd->add_option("--history-cap", train_args.history_cap,
                        "score window size");
  train_cmd->add_option("--warmup", train_args.warmup,
                        "examples before the first cutoff");
  train_cmd->add_option("--gazetteer", train_args.gazetteer, "term file");
  train_cmd->add_option("--stopwords", train_args.stopwords, "stopword file");
  train_cmd->add_option("--min-count", train_args.min_count, "vocab min count");
  train_cmd->add_flag("--dump-nlls", train_args.dump_nlls,
                      "write per-token NLL snapshots at every epoch boundary");
  train_cmd->add_option("--log-every", train_args.log_every, "progress interval");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "decode and score model arms");
  eval_cmd->add_option("--in", eval_args.in, "held-out corpus")->required();
  eval_cmd->add_option("--model", eval_args.models,
                       "model checkpoint (repeatable, one row per model)");
  eval_cmd->add_flag("--identity", eval_args.identity,
                     "add a pseudo-arm whose output is the source");
  eval_cmd->add_flag("--references", eval_args.references,
                     "add a pseudo-arm whose output is the target");
  eval_cmd->add_option("--gazetteer", eval_args.gazetteer, "term file");
  eval_cmd->add_option("--stopwords", eval_args.stopwords, "stopword file");
  eval_cmd->add_option("--out", eval_args.out, "report path prefix (.csv/.json)");
  eval_cmd->add_option("--format", eval_args.format, "table | csv | json");
  eval_cmd->add_option("--max-len", eval_args.max_len, "decode length limit");
  eval_cmd->add_option("--seed", eval_args.seed, "seed recorded in the manifest");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "NLL separation analysis from trace dumps");
  analyze_cmd->add_option("--dumps", analyze_args.dumps, "dumps.json from train")
      ->required();
  analyze_cmd->add_option("--in", analyze_args.in, "the corpus that was trained on")
      ->required();
  analyze_cmd->add_option("--gazetteer", analyze_args.gazetteer, "term file");
  analyze_cmd->add_option("--stopwords", analyze_args.stopwords, "stopword file");
  analyze_cmd->add_option("--out", analyze_args.out, "report path (JSON)");
  analyze_cmd->add_option("--format", analyze_args.format, "table | json");
  analyze_cmd->add_option("--epoch", analyze_args.epoch,
                          "restrict to one epoch (default: all)");
  analyze_cmd->add_option("--alpha", analyze_args.alpha, "significance level");

  ExperimentArgs exp_args;
  auto* exp_cmd = app.add_subcommand(
      "experiment", "run all arms over multiple seeds, evaluate and analyze");
  exp_cmd->add_option("--config", exp_args.config_path, "experiment manifest");
  exp_cmd->add_option("--out-dir", exp_args.out_dir, "output directory");
  exp_cmd->add_flag("--quiet", exp_args.quiet, "suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    gen.seed_given = gen_seed->count() > 0;
    train_args.seed_given = train_seed->count() > 0;
    train_args.strategy_given = train_strategy->count() > 0;
    if (generate_cmd->parsed()) return cmd_generate(gen);
    if (clean_cmd->parsed()) return cmd_clean(clean);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_args);
    if (exp_cmd->parsed()) return cmd_experiment(exp_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
