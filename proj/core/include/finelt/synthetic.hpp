#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finelt/corpus.hpp"

namespace finelt {

/// Configuration of the synthetic noisy-corpus generator. Sources and
/// targets are drawn independently from their template lists and share one
/// set of slot values, so every entity mentioned in a target also occurs in
/// its source. Every target ends with a closing sentence; with probability
/// `noise_rate` that closer is replaced by a fixed carrier sentence holding
/// a date that does not occur in the source, and the example is marked
/// oracle_noisy.
struct SyntheticConfig {
  size_t n_examples = 1000;
  double noise_rate = 0.3;
  std::vector<std::string> names;
  std::vector<std::string> dates;
  std::vector<std::string> numbers;
  std::vector<std::string> terms;
  std::vector<std::string> source_templates;  // placeholders: {name} {number} {term} {date}
  std::vector<std::string> target_templates;
  std::vector<std::string> target_closers;  // entity-free closing sentences
  uint64_t seed = 1;
  std::string id_prefix = "syn";

  /// Built-in pools and templates sized for desk-scale experiments.
  static SyntheticConfig defaults();

  void validate() const;
};

/// Per-example record of what the generator injected (empty optional for
/// clean examples). Used by audits and tests.
struct GenerationLog {
  std::vector<std::optional<std::string>> injected;
};

/// Fixed prefix of the injected noise sentence.
std::string_view noise_carrier_prefix();

Corpus generate_synthetic(const SyntheticConfig& config);
Corpus generate_synthetic(const SyntheticConfig& config, GenerationLog& log);

}  // namespace finelt
