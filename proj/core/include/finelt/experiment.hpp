#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "finelt/cleaning.hpp"
#include "finelt/metrics.hpp"
#include "finelt/model.hpp"
#include "finelt/synthetic.hpp"
#include "finelt/truncation.hpp"

namespace finelt {

/// Multi-seed experiment over the four training arms (standard, loss
/// truncation, fine-grained loss truncation, standard on the drop-example
/// cleaned corpus), each evaluated by greedy decoding of a held-out split.
struct ExperimentConfig {
  SyntheticConfig data = SyntheticConfig::defaults();  // pools and templates
  size_t train_n = 2000;
  size_t eval_n = 500;
  double noise_rate = 0.3;
  std::vector<uint64_t> seeds = {101, 102, 103, 104, 105};
  int epochs = 3;
  double learning_rate = 0.1;
  ModelConfig model{};
  TruncationConfig lt_truncation;
  TruncationConfig fine_truncation;
  int analysis_epoch = 1;
  size_t decode_max_len = 48;

  static ExperimentConfig defaults();
};

struct EvalRow {
  std::string arm;
  uint64_t seed = 0;
  double hr = 0.0;
  size_t flagged = 0;
  size_t total = 0;
  double sari = 0.0;
  double rouge = 0.0;
};

struct SeedSummary {
  uint64_t seed = 0;
  std::map<std::string, double> hr_by_arm;
  double delta_example = 0.0;      // group mean NLL gap, example level
  double delta_token = 0.0;        // group mean NLL gap, token level
  double token_p_value = 1.0;
  bool token_test_significant = false;
  bool lt_below_standard = false;
  bool fine_at_most_lt = false;
  bool cleaned_below_standard = false;
  bool token_delta_dominates = false;
};

struct ExperimentResult {
  std::vector<EvalRow> rows;
  std::vector<SeedSummary> seeds;
  std::map<std::string, double> mean_hr_by_arm;
  int seeds_lt_below_standard = 0;
  int seeds_fine_at_most_lt = 0;
  int seeds_cleaned_below_standard = 0;
  int seeds_token_test_significant = 0;
  int seeds_token_delta_dominates = 0;

  std::string to_json() const;
  std::string to_table() const;
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::ostream* progress = nullptr);

}  // namespace finelt
