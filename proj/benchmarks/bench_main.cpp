#include <benchmark/benchmark.h>

#include "finelt/cleaning.hpp"
#include "finelt/metrics.hpp"
#include "finelt/model.hpp"
#include "finelt/ner.hpp"
#include "finelt/rng.hpp"
#include "finelt/synthetic.hpp"
#include "finelt/truncation.hpp"

using namespace finelt;

namespace {

SyntheticConfig bench_data() {
  auto config = SyntheticConfig::defaults();
  config.n_examples = 200;
  config.noise_rate = 0.3;
  config.seed = 4242;
  return config;
}

void BM_TruncationObserve(benchmark::State& state) {
  TruncationConfig config;
  config.recompute_interval = 1000;
  config.history_cap = 10000;
  config.warmup = 1000;
  TruncationState trunc(config);
  Rng rng(1);
  for (auto _ : state) {
    const double score = rng.next_in(0.0, 10.0);
    benchmark::DoNotOptimize(trunc.observe(score, score));
  }
}
BENCHMARK(BM_TruncationObserve);

void BM_ExtractEntities(benchmark::State& state) {
  const auto config = bench_data();
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());
  const Corpus corpus = generate_synthetic(config);
  size_t i = 0;
  for (auto _ : state) {
    const Example& ex = corpus[i++ % corpus.size()];
    benchmark::DoNotOptimize(extract_entities(ex.target, gazetteer));
  }
}
BENCHMARK(BM_ExtractEntities);

void BM_CleanExample(benchmark::State& state) {
  const auto config = bench_data();
  const Gazetteer gazetteer(config.terms, Gazetteer::default_stopwords());
  const Corpus corpus = generate_synthetic(config);
  size_t i = 0;
  for (auto _ : state) {
    const Example& ex = corpus[i++ % corpus.size()];
    benchmark::DoNotOptimize(
        clean_example(ex, CleaningMode::DropSentence, gazetteer));
  }
}
BENCHMARK(BM_CleanExample);

void BM_ForwardBackward(benchmark::State& state) {
  const auto config = bench_data();
  const Corpus corpus = generate_synthetic(config);
  const Vocab vocab = build_vocab(corpus, 1);
  ModelParams params = ModelParams::init({}, vocab.size(), 7);
  Gradients grads = Gradients::like(params);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> encoded;
  for (const Example& ex : corpus) {
    auto src = tokenize(ex.source, vocab).tokens;
    auto tgt = tokenize(ex.target, vocab).tokens;
    tgt.push_back(Vocab::kEos);
    encoded.emplace_back(std::move(src), std::move(tgt));
  }
  size_t i = 0;
  for (auto _ : state) {
    const auto& [src, tgt] = encoded[i++ % encoded.size()];
    benchmark::DoNotOptimize(forward_nll(params, src, tgt));
    backward(params, src, tgt, 1.0, grads);
    benchmark::DoNotOptimize(grads.b_out.data());
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_RougeLSum(benchmark::State& state) {
  const auto config = bench_data();
  const Corpus corpus = generate_synthetic(config);
  size_t i = 0;
  for (auto _ : state) {
    const Example& a = corpus[i % corpus.size()];
    const Example& b = corpus[(i + 1) % corpus.size()];
    ++i;
    benchmark::DoNotOptimize(rouge_l_sum(a.target, {b.target}));
  }
}
BENCHMARK(BM_RougeLSum);

void BM_Sari(benchmark::State& state) {
  const auto config = bench_data();
  const Corpus corpus = generate_synthetic(config);
  size_t i = 0;
  for (auto _ : state) {
    const Example& a = corpus[i % corpus.size()];
    const Example& b = corpus[(i + 1) % corpus.size()];
    ++i;
    benchmark::DoNotOptimize(sari(a.source, b.target, {a.target}));
  }
}
BENCHMARK(BM_Sari);

void BM_MannWhitneyExact(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> a(6), b(6);
  for (double& v : a) v = rng.next_double();
  for (double& v : b) v = rng.next_double();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mann_whitney_one_sided(a, b, 0.05, UTestMethod::Exact));
  }
}
BENCHMARK(BM_MannWhitneyExact);

}  // namespace

BENCHMARK_MAIN();
