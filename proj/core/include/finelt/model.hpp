#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "finelt/corpus.hpp"
#include "finelt/ner.hpp"
#include "finelt/truncation.hpp"

namespace finelt {

struct ModelConfig {
  int embed_dim = 32;
  int hidden_dim = 64;
  int context = 4;  // previous target tokens fed to the predictor
};

/// Parameters of the conditional k-gram language model:
///   x_t      = [E[y_{t-k}] ... E[y_{t-1}], mean_j E[src_j]]
///   hidden_t = tanh(W.x_t + b)
///   p(. | y_{<t}, src) = softmax(U.hidden_t + c)
/// All math is double precision; log-softmax uses max subtraction.
struct ModelParams {
  ModelConfig config;
  int vocab_size = 0;
  std::vector<double> embed;     // vocab_size x embed_dim
  std::vector<double> w_hidden;  // (context+1)*embed_dim x hidden_dim
  std::vector<double> b_hidden;  // hidden_dim
  std::vector<double> w_out;     // hidden_dim x vocab_size
  std::vector<double> b_out;     // vocab_size

  /// Uniform(-0.05, 0.05) weights from the seed, zero biases.
  static ModelParams init(ModelConfig config, int vocab_size, uint64_t seed);
  /// All-zero parameters (uniform output distribution).
  static ModelParams zeros(ModelConfig config, int vocab_size);

  size_t parameter_count() const;
};

struct Gradients {
  std::vector<double> embed;
  std::vector<double> w_hidden;
  std::vector<double> b_hidden;
  std::vector<double> w_out;
  std::vector<double> b_out;

  static Gradients like(const ModelParams& params);
  void zero();
};

/// Per-token negative log-likelihoods of `target` given `source`.
std::vector<double> forward_nll(const ModelParams& params,
                                std::span<const int> source,
                                std::span<const int> target);

/// Next-token distribution after the (possibly empty) target prefix.
std::vector<double> token_distribution(const ModelParams& params,
                                       std::span<const int> source,
                                       std::span<const int> prefix);

/// Gradients of loss_scale * sum_t NLL_t with respect to every parameter
/// block. loss_scale must be 0 or 1 (the truncation keep indicator); scale 0
/// yields exactly zero gradients.
void backward(const ModelParams& params, std::span<const int> source,
              std::span<const int> target, double loss_scale, Gradients& out);
Gradients backward(const ModelParams& params, std::span<const int> source,
                   std::span<const int> target, double loss_scale);

void apply_sgd(ModelParams& params, const Gradients& grads, double learning_rate);

/// Greedy argmax decoding until EOS or max_len tokens; ties break toward the
/// lowest token id. The returned sequence excludes EOS.
std::vector<int> generate(const ModelParams& params, std::span<const int> source,
                          size_t max_len);

enum class Strategy { Standard, LossTruncation, FineLossTruncation, None };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 3;
  uint64_t seed = 1;
  Strategy strategy = Strategy::Standard;
  TruncationConfig truncation{};
  int log_every = 0;            // 0 = no progress lines
  bool dump_token_nlls = false; // per-token NLL snapshots at every epoch boundary
  ModelConfig model{};
};

struct StepRecord {
  size_t step = 0;
  int epoch = 0;
  std::string example_id;
  double nll = 0.0;
  double score = 0.0;
  double cutoff = 0.0;
  bool kept = true;
};

/// Per-token NLLs of every example (corpus order, target tokens only, no
/// EOS term) measured with the parameters after `epoch` epochs.
struct EpochNllDump {
  int epoch = 0;
  std::vector<std::vector<double>> token_nlls;
};

struct TrainTrace {
  std::vector<StepRecord> steps;
  std::vector<EpochNllDump> dumps;
};

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
};

/// Single-example SGD over a seeded shuffle of the corpus. The strategy
/// decides the truncation score per example: the full NLL sum for
/// LossTruncation, the entity-masked sum for FineLossTruncation (entities
/// from the rule-based extractor). A truncated example contributes exactly
/// zero parameter change. Throws on NaN/Inf loss with the failing step index.
TrainResult train(const Corpus& corpus, const Vocab& vocab,
                  const TrainConfig& config,
                  const Gazetteer& gazetteer = Gazetteer(),
                  const ModelParams* initial = nullptr,
                  std::ostream* progress = nullptr);

void save_checkpoint(const ModelParams& params, const Vocab& vocab,
                     const std::filesystem::path& path);
struct Checkpoint {
  ModelParams params;
  Vocab vocab;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Step records as CSV, preceded by `manifest_line` (emitted as a comment)
/// and a header row.
std::string trace_to_csv(const TrainTrace& trace, std::string_view manifest_line);
void save_trace_csv(const TrainTrace& trace, std::string_view manifest_line,
                    const std::filesystem::path& path);

std::string dumps_to_json(const TrainTrace& trace, const Corpus& corpus);
void save_dumps_json(const TrainTrace& trace, const Corpus& corpus,
                     const std::filesystem::path& path);
/// Loads dumps saved by save_dumps_json; ids must match the corpus used for
/// analysis.
std::vector<EpochNllDump> load_dumps_json(const std::filesystem::path& path,
                                          std::vector<std::string>* ids = nullptr);

}  // namespace finelt
