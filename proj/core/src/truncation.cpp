#include "finelt/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace finelt {

void TruncationConfig::validate() const {
  if (!(keep_quantile > 0.0 && keep_quantile <= 1.0)) {
    throw std::runtime_error("keep quantile out of range (0,1]");
  }
  if (recompute_interval < 1) throw std::runtime_error("recompute interval < 1");
  if (history_cap < recompute_interval) {
    throw std::runtime_error("history cap smaller than recompute interval");
  }
}

double example_score(std::span<const double> token_nlls) {
  double sum = 0.0;
  for (double v : token_nlls) {
    if (v < 0.0 || std::isnan(v)) throw std::runtime_error("invalid NLL");
    sum += v;
  }
  return sum;
}

double fine_score(std::span<const double> token_nlls,
                  const std::vector<bool>& entity_mask) {
  if (token_nlls.size() != entity_mask.size()) {
    throw std::runtime_error("token NLL / entity mask length mismatch");
  }
  double sum = 0.0;
  for (size_t i = 0; i < token_nlls.size(); ++i) {
    if (token_nlls[i] < 0.0 || std::isnan(token_nlls[i])) {
      throw std::runtime_error("invalid NLL");
    }
    if (entity_mask[i]) sum += token_nlls[i];
  }
  return sum;
}

TruncationState::TruncationState(TruncationConfig config)
    : config_(config), cutoff_(std::numeric_limits<double>::infinity()) {
  config_.validate();
}

LossOutcome TruncationState::observe(double score, double nll) {
  history_.push_back(score);
  while (history_.size() > config_.history_cap) history_.pop_front();
  ++seen_;
  if (seen_ % config_.recompute_interval == 0 && seen_ >= config_.warmup) {
    recompute_cutoff();
  }
  LossOutcome outcome;
  outcome.nll = nll;
  outcome.score = score;
  if (config_.mode == TruncationMode::Fine && score == 0.0) {
    // A target with no entity tokens cannot hold an entity hallucination.
    outcome.kept = true;
  } else {
    outcome.kept = score < cutoff_;
  }
  outcome.effective_loss = outcome.kept ? nll : 0.0;
  return outcome;
}

double TruncationState::recompute_cutoff() {
  if (history_.empty()) throw std::runtime_error("no observations");
  std::vector<double> window(history_.begin(), history_.end());
  const size_t n = window.size();
  const size_t rank = static_cast<size_t>(
      std::ceil(config_.keep_quantile * static_cast<double>(n)));
  const size_t index = std::min(n, std::max<size_t>(rank, 1)) - 1;
  std::nth_element(window.begin(), window.begin() + static_cast<long>(index),
                   window.end());
  cutoff_ = window[index];
  return cutoff_;
}

std::string TruncationState::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["keep_quantile"] = config_.keep_quantile;
  j["recompute_interval"] = config_.recompute_interval;
  j["history_cap"] = config_.history_cap;
  j["mode"] = config_.mode == TruncationMode::Fine ? "fine" : "example";
  j["warmup"] = config_.warmup;
  j["examples_seen"] = seen_;
  if (std::isinf(cutoff_)) {
    j["cutoff"] = nullptr;
  } else {
    j["cutoff"] = cutoff_;
  }
  j["history"] = std::vector<double>(history_.begin(), history_.end());
  return j.dump();
}

TruncationState TruncationState::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TruncationConfig config;
  config.keep_quantile = j.at("keep_quantile").get<double>();
  config.recompute_interval = j.at("recompute_interval").get<size_t>();
  config.history_cap = j.at("history_cap").get<size_t>();
  config.mode = j.at("mode").get<std::string>() == "fine" ? TruncationMode::Fine
                                                          : TruncationMode::Example;
  config.warmup = j.at("warmup").get<size_t>();
  TruncationState state(config);
  state.seen_ = j.at("examples_seen").get<size_t>();
  if (!j.at("cutoff").is_null()) state.cutoff_ = j.at("cutoff").get<double>();
  for (double v : j.at("history")) state.history_.push_back(v);
  return state;
}

}  // namespace finelt
