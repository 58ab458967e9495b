#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace finelt {

enum class TruncationMode { Example, Fine };

/// Streaming loss-truncation settings.
///
/// `keep_quantile` is the fraction of observed scores kept below the cutoff
/// ("80% truncate rate" reads as keep the bottom 80%, drop the top 20%).
/// The cutoff is recomputed every `recompute_interval` observations over a
/// sliding window of the most recent `history_cap` scores, and stays at
/// +infinity (keep everything) until `warmup` observations have been seen
/// and the first recompute has fired.
struct TruncationConfig {
  double keep_quantile = 0.8;
  size_t recompute_interval = 1000;
  size_t history_cap = 10000;
  TruncationMode mode = TruncationMode::Example;
  size_t warmup = 1000;

  void validate() const;
};

/// Outcome of one observed example: `kept` is the indicator score < cutoff,
/// `effective_loss` is nll when kept and exactly 0 otherwise.
struct LossOutcome {
  double nll = 0.0;
  double score = 0.0;
  bool kept = true;
  double effective_loss = 0.0;
};

/// Full example loss: the sum of the per-token negative log-likelihoods.
/// Throws "invalid NLL" on a negative entry.
double example_score(std::span<const double> token_nlls);

/// Fine-grained truncation score: the sum of per-token NLLs at entity
/// positions only. Zero when the mask is all-false.
double fine_score(std::span<const double> token_nlls,
                  const std::vector<bool>& entity_mask);

class TruncationState {
 public:
  explicit TruncationState(TruncationConfig config);

  /// Records one example score, advancing the cutoff schedule, and decides
  /// whether the example's loss is kept. In Fine mode a zero score (target
  /// without entity tokens) is always kept.
  LossOutcome observe(double score, double nll);

  /// Nearest-rank keep-quantile of the retained window: the
  /// ceil(q * N)-th smallest of the N retained scores. Stores and returns
  /// the new cutoff. Throws "no observations" when the window is empty.
  double recompute_cutoff();

  double cutoff() const { return cutoff_; }
  size_t examples_seen() const { return seen_; }
  const std::deque<double>& history() const { return history_; }
  const TruncationConfig& config() const { return config_; }

  /// JSON checkpoint for resumable training.
  std::string to_json() const;
  static TruncationState from_json(const std::string& text);

 private:
  TruncationConfig config_;
  std::deque<double> history_;
  double cutoff_;
  size_t seen_ = 0;
};

}  // namespace finelt
