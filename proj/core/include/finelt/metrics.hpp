#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finelt/corpus.hpp"
#include "finelt/model.hpp"
#include "finelt/ner.hpp"

namespace finelt {

/// Hallucination-rate report: an output is flagged when it contains at
/// least one entity not supported by its source.
struct HRReport {
  struct ExampleFlag {
    std::string id;
    bool flagged = false;
    std::vector<EntitySpan> unsupported;
  };

  size_t flagged = 0;
  size_t total = 0;
  double rate = 0.0;
  std::vector<ExampleFlag> per_example;

  std::string to_json() const;
  std::string to_csv(std::string_view manifest_line) const;
};

HRReport hallucination_rate(
    const std::vector<std::pair<std::string, std::string>>& source_and_output,
    const Gazetteer& gazetteer);

/// Label-noise audit: the hallucination rate of (source, target) pairs over
/// the first `first_n` examples.
HRReport label_noise_rate(const Corpus& corpus, const Gazetteer& gazetteer,
                          size_t first_n);

enum class UTestMethod { Auto, Exact, NormalApprox };

struct UTestResult {
  double u = 0.0;  // U statistic of sample A (ties counted 1/2)
  size_t n1 = 0;
  size_t n2 = 0;
  double p_value = 1.0;  // one-sided, alternative: A stochastically greater
  double alpha = 0.05;
  bool significant = false;
  UTestMethod method_used = UTestMethod::NormalApprox;
};

/// One-sided Mann-Whitney U test (alternative: A > B). Midranks for ties;
/// exact enumeration when n1+n2 <= 12 (or forced), otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
UTestResult mann_whitney_one_sided(std::span<const double> sample_a,
                                   std::span<const double> sample_b,
                                   double alpha = 0.05,
                                   UTestMethod method = UTestMethod::Auto);

struct GroupStats {
  double mean = 0.0;
  size_t count = 0;
};

/// Group mean-NLL report (Table-2/3 style): named groups, the delta between
/// the two designated groups, and the significance test for it.
struct GroupNLLReport {
  std::vector<std::pair<std::string, GroupStats>> groups;
  std::string delta_label;
  std::optional<double> delta;
  std::optional<UTestResult> utest;

  const GroupStats* find(std::string_view name) const;
  std::string to_json() const;
  std::string to_table() const;
};

/// Example-level analysis: groups per-example NLL (mean over target tokens)
/// by the oracle noise flag. Delta = mean(noisy) - mean(clean); one-sided
/// test that noisy NLL is greater.
GroupNLLReport group_nll_examples(const EpochNllDump& dump, const Corpus& corpus,
                                  double alpha = 0.05);

/// Token-level analysis: partitions target tokens into non-entity,
/// factual-entity and non-factual-entity groups (a token is non-factual iff
/// it lies in an unsupported entity span). Delta = mean(non-factual entity)
/// - mean(factual entity). With `cross_sentence`, factual-entity tokens are
/// additionally split by the factuality of the target they appear in.
GroupNLLReport group_nll_tokens(const EpochNllDump& dump, const Corpus& corpus,
                                const Gazetteer& gazetteer, double alpha = 0.05,
                                bool cross_sentence = true);

/// Summary-level ROUGE-L: per reference sentence, the union of LCS matches
/// against all candidate sentences; F = 2PR/(P+R); maximum over references.
double rouge_l_sum(const std::string& candidate,
                   const std::vector<std::string>& references);

/// SARI in [0, 100]: add/keep/delete n-gram scores averaged over n = 1..4.
/// Delete uses precision only. A component whose n-gram sets are empty is
/// undefined and contributes 0.
double sari(const std::string& source, const std::string& candidate,
            const std::vector<std::string>& references);

}  // namespace finelt
