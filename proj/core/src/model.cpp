#include "finelt/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "finelt/rng.hpp"

namespace finelt {

namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void check_ids(std::span<const int> ids, int vocab_size) {
  for (int id : ids) {
    if (id < 0 || id >= vocab_size) {
      throw std::out_of_range("token id out of range");
    }
  }
}

// Shared forward pass machinery. Buffers are reused across calls to keep the
// training loop allocation-free.
struct Workspace {
  std::vector<double> src_mean;  // d
  std::vector<double> x;         // (k+1)*d
  std::vector<double> hidden;    // h
  std::vector<double> logits;    // V
  std::vector<double> probs;     // V
  // per-position caches for the backward pass
  std::vector<double> xs;        // T x (k+1)*d
  std::vector<double> hiddens;   // T x h
  std::vector<double> dz;        // V
  std::vector<double> dh;        // h
  std::vector<double> dx;        // (k+1)*d

  void resize(const ModelParams& p) {
    const size_t d = static_cast<size_t>(p.config.embed_dim);
    const size_t k = static_cast<size_t>(p.config.context);
    const size_t h = static_cast<size_t>(p.config.hidden_dim);
    const size_t v = static_cast<size_t>(p.vocab_size);
    src_mean.assign(d, 0.0);
    x.assign((k + 1) * d, 0.0);
    hidden.assign(h, 0.0);
    logits.assign(v, 0.0);
    probs.assign(v, 0.0);
    dz.assign(v, 0.0);
    dh.assign(h, 0.0);
    dx.assign((k + 1) * d, 0.0);
  }
};

void compute_source_mean(const ModelParams& p, std::span<const int> source,
                         std::vector<double>& mean) {
  const size_t d = static_cast<size_t>(p.config.embed_dim);
  std::fill(mean.begin(), mean.end(), 0.0);
  if (source.empty()) return;
  for (int id : source) {
    const double* row = p.embed.data() + static_cast<size_t>(id) * d;
    for (size_t c = 0; c < d; ++c) mean[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(source.size());
  for (size_t c = 0; c < d; ++c) mean[c] *= inv;
}

// Fills ws.x with the context embeddings for position t (BOS padded) and the
// precomputed source mean, then runs the affine+tanh+affine stack.
// Returns the log-sum-exp of the logits.
double forward_position(const ModelParams& p, std::span<const int> target,
                        size_t t, Workspace& ws) {
  const size_t d = static_cast<size_t>(p.config.embed_dim);
  const size_t k = static_cast<size_t>(p.config.context);
  const size_t h = static_cast<size_t>(p.config.hidden_dim);
  const size_t v = static_cast<size_t>(p.vocab_size);

  for (size_t slot = 0; slot < k; ++slot) {
    const long idx = static_cast<long>(t) - static_cast<long>(k) +
                     static_cast<long>(slot);
    const int id = idx >= 0 ? target[static_cast<size_t>(idx)] : Vocab::kBos;
    const double* row = p.embed.data() + static_cast<size_t>(id) * d;
    std::copy(row, row + d, ws.x.begin() + static_cast<long>(slot * d));
  }
  std::copy(ws.src_mean.begin(), ws.src_mean.end(),
            ws.x.begin() + static_cast<long>(k * d));

  std::copy(p.b_hidden.begin(), p.b_hidden.end(), ws.hidden.begin());
  const size_t in_dim = (k + 1) * d;
  for (size_t i = 0; i < in_dim; ++i) {
    const double xi = ws.x[i];
    if (xi == 0.0) continue;
    const double* wrow = p.w_hidden.data() + i * h;
    for (size_t j = 0; j < h; ++j) ws.hidden[j] += xi * wrow[j];
  }
  for (size_t j = 0; j < h; ++j) ws.hidden[j] = std::tanh(ws.hidden[j]);

  std::copy(p.b_out.begin(), p.b_out.end(), ws.logits.begin());
  for (size_t j = 0; j < h; ++j) {
    const double hj = ws.hidden[j];
    const double* urow = p.w_out.data() + j * v;
    for (size_t o = 0; o < v; ++o) ws.logits[o] += hj * urow[o];
  }

  double max_logit = ws.logits[0];
  for (size_t o = 1; o < v; ++o) max_logit = std::max(max_logit, ws.logits[o]);
  double sum = 0.0;
  for (size_t o = 0; o < v; ++o) sum += std::exp(ws.logits[o] - max_logit);
  return max_logit + std::log(sum);
}

}  // namespace

ModelParams ModelParams::init(ModelConfig config, int vocab_size, uint64_t seed) {
  ModelParams p = zeros(config, vocab_size);
  Rng rng(seed);
  auto fill = [&](std::vector<double>& block) {
    for (double& w : block) w = rng.next_in(-0.05, 0.05);
  };
  fill(p.embed);
  fill(p.w_hidden);
  fill(p.w_out);
  return p;
}

ModelParams ModelParams::zeros(ModelConfig config, int vocab_size) {
  if (vocab_size <= 0) throw std::runtime_error("vocab size must be positive");
  ModelParams p;
  p.config = config;
  p.vocab_size = vocab_size;
  const size_t d = static_cast<size_t>(config.embed_dim);
  const size_t k = static_cast<size_t>(config.context);
  const size_t h = static_cast<size_t>(config.hidden_dim);
  const size_t v = static_cast<size_t>(vocab_size);
  p.embed.assign(v * d, 0.0);
  p.w_hidden.assign((k + 1) * d * h, 0.0);
  p.b_hidden.assign(h, 0.0);
  p.w_out.assign(h * v, 0.0);
  p.b_out.assign(v, 0.0);
  return p;
}

size_t ModelParams::parameter_count() const {
  return embed.size() + w_hidden.size() + b_hidden.size() + w_out.size() +
         b_out.size();
}

Gradients Gradients::like(const ModelParams& params) {
  Gradients g;
  g.embed.assign(params.embed.size(), 0.0);
  g.w_hidden.assign(params.w_hidden.size(), 0.0);
  g.b_hidden.assign(params.b_hidden.size(), 0.0);
  g.w_out.assign(params.w_out.size(), 0.0);
  g.b_out.assign(params.b_out.size(), 0.0);
  return g;
}

void Gradients::zero() {
  auto clear = [](std::vector<double>& v) {
    std::memset(v.data(), 0, v.size() * sizeof(double));
  };
  clear(embed);
  clear(w_hidden);
  clear(b_hidden);
  clear(w_out);
  clear(b_out);
}

std::vector<double> forward_nll(const ModelParams& params,
                                std::span<const int> source,
                                std::span<const int> target) {
  check_ids(source, params.vocab_size);
  check_ids(target, params.vocab_size);
  Workspace ws;
  ws.resize(params);
  compute_source_mean(params, source, ws.src_mean);
  std::vector<double> nlls(target.size(), 0.0);
  for (size_t t = 0; t < target.size(); ++t) {
    const double lse = forward_position(params, target, t, ws);
    nlls[t] = lse - ws.logits[static_cast<size_t>(target[t])];
  }
  return nlls;
}

std::vector<double> token_distribution(const ModelParams& params,
                                       std::span<const int> source,
                                       std::span<const int> prefix) {
  check_ids(source, params.vocab_size);
  check_ids(prefix, params.vocab_size);
  Workspace ws;
  ws.resize(params);
  compute_source_mean(params, source, ws.src_mean);
  const double lse = forward_position(params, prefix, prefix.size(), ws);
  std::vector<double> probs(ws.logits.size());
  for (size_t o = 0; o < probs.size(); ++o) {
    probs[o] = std::exp(ws.logits[o] - lse);
  }
  return probs;
}

void backward(const ModelParams& params, std::span<const int> source,
              std::span<const int> target, double loss_scale, Gradients& out) {
  if (loss_scale != 0.0 && loss_scale != 1.0) {
    throw std::runtime_error("loss scale must be 0 or 1");
  }
  out.zero();
  if (loss_scale == 0.0 || target.empty()) return;
  check_ids(source, params.vocab_size);
  check_ids(target, params.vocab_size);

  const size_t d = static_cast<size_t>(params.config.embed_dim);
  const size_t k = static_cast<size_t>(params.config.context);
  const size_t h = static_cast<size_t>(params.config.hidden_dim);
  const size_t v = static_cast<size_t>(params.vocab_size);
  const size_t in_dim = (k + 1) * d;

  Workspace ws;
  ws.resize(params);
  compute_source_mean(params, source, ws.src_mean);
  const double src_inv =
      source.empty() ? 0.0 : 1.0 / static_cast<double>(source.size());

  for (size_t t = 0; t < target.size(); ++t) {
    const double lse = forward_position(params, target, t, ws);

    // dz = softmax - onehot(y_t)
    for (size_t o = 0; o < v; ++o) ws.dz[o] = std::exp(ws.logits[o] - lse);
    ws.dz[static_cast<size_t>(target[t])] -= 1.0;

    for (size_t o = 0; o < v; ++o) out.b_out[o] += ws.dz[o];
    std::fill(ws.dh.begin(), ws.dh.end(), 0.0);
    for (size_t j = 0; j < h; ++j) {
      const double hj = ws.hidden[j];
      const double* urow = params.w_out.data() + j * v;
      double* gurow = out.w_out.data() + j * v;
      double acc = 0.0;
      for (size_t o = 0; o < v; ++o) {
        gurow[o] += hj * ws.dz[o];
        acc += urow[o] * ws.dz[o];
      }
      ws.dh[j] = acc;
    }

    // through tanh
    for (size_t j = 0; j < h; ++j) {
      const double hj = ws.hidden[j];
      ws.dh[j] *= 1.0 - hj * hj;
      out.b_hidden[j] += ws.dh[j];
    }

    std::fill(ws.dx.begin(), ws.dx.end(), 0.0);
    for (size_t i = 0; i < in_dim; ++i) {
      const double xi = ws.x[i];
      const double* wrow = params.w_hidden.data() + i * h;
      double* gwrow = out.w_hidden.data() + i * h;
      double acc = 0.0;
      for (size_t j = 0; j < h; ++j) {
        gwrow[j] += xi * ws.dh[j];
        acc += wrow[j] * ws.dh[j];
      }
      ws.dx[i] = acc;
    }

    // context embedding gradients
    for (size_t slot = 0; slot < k; ++slot) {
      const long idx = static_cast<long>(t) - static_cast<long>(k) +
                       static_cast<long>(slot);
      const int id = idx >= 0 ? target[static_cast<size_t>(idx)] : Vocab::kBos;
      double* grow = out.embed.data() + static_cast<size_t>(id) * d;
      const double* dxs = ws.dx.data() + slot * d;
      for (size_t c = 0; c < d; ++c) grow[c] += dxs[c];
    }
    // source mean embedding gradients
    const double* dxm = ws.dx.data() + k * d;
    for (int id : source) {
      double* grow = out.embed.data() + static_cast<size_t>(id) * d;
      for (size_t c = 0; c < d; ++c) grow[c] += dxm[c] * src_inv;
    }
  }
}

Gradients backward(const ModelParams& params, std::span<const int> source,
                   std::span<const int> target, double loss_scale) {
  Gradients g = Gradients::like(params);
  backward(params, source, target, loss_scale, g);
  return g;
}

void apply_sgd(ModelParams& params, const Gradients& grads, double learning_rate) {
  auto step = [learning_rate](std::vector<double>& w, const std::vector<double>& g) {
    for (size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * g[i];
  };
  step(params.embed, grads.embed);
  step(params.w_hidden, grads.w_hidden);
  step(params.b_hidden, grads.b_hidden);
  step(params.w_out, grads.w_out);
  step(params.b_out, grads.b_out);
}

std::vector<int> generate(const ModelParams& params, std::span<const int> source,
                          size_t max_len) {
  if (max_len < 1) throw std::runtime_error("max_len must be >= 1");
  check_ids(source, params.vocab_size);
  Workspace ws;
  ws.resize(params);
  compute_source_mean(params, source, ws.src_mean);
  std::vector<int> out;
  while (out.size() < max_len) {
    forward_position(params, out, out.size(), ws);
    int best = 0;
    for (int o = 1; o < params.vocab_size; ++o) {
      if (ws.logits[static_cast<size_t>(o)] > ws.logits[static_cast<size_t>(best)]) {
        best = o;
      }
    }
    if (best == Vocab::kEos) break;
    out.push_back(best);
  }
  return out;
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Standard: return "standard";
    case Strategy::LossTruncation: return "lt";
    case Strategy::FineLossTruncation: return "lt-fine";
    case Strategy::None: return "none";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "standard") return Strategy::Standard;
  if (name == "lt") return Strategy::LossTruncation;
  if (name == "lt-fine" || name == "lt_fine") return Strategy::FineLossTruncation;
  if (name == "none") return Strategy::None;
  throw std::runtime_error("unknown strategy: " + std::string(name));
}

namespace {

struct PreparedExample {
  std::vector<int> source_ids;
  std::vector<int> target_ids;  // with EOS appended
  std::vector<bool> fine_mask;  // aligned with target_ids, EOS entry false
  size_t target_token_count = 0;
};

PreparedExample prepare(const Example& ex, const Vocab& vocab,
                        const Gazetteer& gazetteer, bool need_mask) {
  PreparedExample prep;
  const TokenizedText src = tokenize(ex.source, vocab);
  const TokenizedText tgt = tokenize(ex.target, vocab);
  prep.source_ids = src.tokens;
  prep.target_ids = tgt.tokens;
  prep.target_token_count = tgt.tokens.size();
  prep.target_ids.push_back(Vocab::kEos);
  if (need_mask) {
    const auto entities = extract_entities(ex.target, gazetteer);
    prep.fine_mask = entity_token_mask(tgt, entities).mask;
    prep.fine_mask.push_back(false);  // EOS carries no entity
  }
  return prep;
}

}  // namespace

TrainResult train(const Corpus& corpus, const Vocab& vocab,
                  const TrainConfig& config, const Gazetteer& gazetteer,
                  const ModelParams* initial, std::ostream* progress) {
  if (corpus.empty()) throw std::runtime_error("empty corpus");
  if (config.learning_rate <= 0.0) throw std::runtime_error("learning rate must be > 0");
  if (config.epochs < 1) throw std::runtime_error("epochs must be >= 1");

  const bool fine = config.strategy == Strategy::FineLossTruncation;
  const bool truncating =
      config.strategy == Strategy::LossTruncation || fine;

  std::vector<PreparedExample> prepared;
  prepared.reserve(corpus.size());
  for (const Example& ex : corpus) {
    prepared.push_back(prepare(ex, vocab, gazetteer, fine));
  }

  ModelParams params = initial
                           ? *initial
                           : ModelParams::init(config.model, vocab.size(),
                                               config.seed);
  if (params.vocab_size != vocab.size()) {
    throw std::runtime_error("checkpoint vocab size does not match corpus vocab");
  }

  TruncationConfig trunc_config = config.truncation;
  trunc_config.mode = fine ? TruncationMode::Fine : TruncationMode::Example;
  std::optional<TruncationState> truncation;
  if (truncating) truncation.emplace(trunc_config);

  TrainTrace trace;
  auto dump_epoch = [&](int epoch) {
    if (!config.dump_token_nlls) return;
    EpochNllDump dump;
    dump.epoch = epoch;
    dump.token_nlls.reserve(prepared.size());
    for (const PreparedExample& prep : prepared) {
      auto nlls = forward_nll(params, prep.source_ids, prep.target_ids);
      nlls.resize(prep.target_token_count);  // drop the EOS term
      dump.token_nlls.push_back(std::move(nlls));
    }
    trace.dumps.push_back(std::move(dump));
  };

  dump_epoch(0);

  Rng order_rng(~config.seed);
  Gradients grads = Gradients::like(params);
  size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    for (size_t idx : order) {
      const PreparedExample& prep = prepared[idx];
      const auto nlls = forward_nll(params, prep.source_ids, prep.target_ids);
      for (double v : nlls) {
        if (!std::isfinite(v)) {
          throw std::runtime_error("non-finite loss at step " +
                                   std::to_string(step) + " (example " +
                                   corpus[idx].id + ")");
        }
      }
      const double nll = example_score(nlls);
      if (!std::isfinite(nll)) {
        throw std::runtime_error("non-finite loss at step " +
                                 std::to_string(step) + " (example " +
                                 corpus[idx].id + ")");
      }
      const double score = fine ? fine_score(nlls, prep.fine_mask) : nll;

      LossOutcome outcome;
      if (truncation) {
        outcome = truncation->observe(score, nll);
      } else {
        outcome.nll = nll;
        outcome.score = score;
        outcome.kept = true;
        outcome.effective_loss = nll;
      }

      const bool update = outcome.kept && config.strategy != Strategy::None;
      if (update) {
        backward(params, prep.source_ids, prep.target_ids, 1.0, grads);
        apply_sgd(params, grads, config.learning_rate);
      }

      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.example_id = corpus[idx].id;
      rec.nll = nll;
      rec.score = score;
      rec.cutoff = truncation ? truncation->cutoff()
                              : std::numeric_limits<double>::infinity();
      rec.kept = outcome.kept;
      trace.steps.push_back(std::move(rec));

      if (progress && config.log_every > 0 &&
          step % static_cast<size_t>(config.log_every) == 0) {
        *progress << "epoch " << epoch << " step " << step << " nll "
                  << format_double(nll) << " kept " << (outcome.kept ? 1 : 0)
                  << "\n";
      }
      ++step;
    }
    dump_epoch(epoch);
  }

  return {std::move(params), std::move(trace)};
}

void save_checkpoint(const ModelParams& params, const Vocab& vocab,
                     const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["model"] = {{"embed_dim", params.config.embed_dim},
                {"hidden_dim", params.config.hidden_dim},
                {"context", params.config.context},
                {"vocab_size", params.vocab_size}};
  j["vocab"] = vocab.tokens();
  j["params"] = {{"embed", params.embed},
                 {"w_hidden", params.w_hidden},
                 {"b_hidden", params.b_hidden},
                 {"w_out", params.w_out},
                 {"b_out", params.b_out}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  ModelConfig config;
  config.embed_dim = j.at("model").at("embed_dim").get<int>();
  config.hidden_dim = j.at("model").at("hidden_dim").get<int>();
  config.context = j.at("model").at("context").get<int>();
  const int vocab_size = j.at("model").at("vocab_size").get<int>();

  Checkpoint ckpt{ModelParams::zeros(config, vocab_size),
                  Vocab::from_token_list(j.at("vocab").get<std::vector<std::string>>())};
  auto load_block = [&](const char* name, std::vector<double>& block) {
    auto values = j.at("params").at(name).get<std::vector<double>>();
    if (values.size() != block.size()) {
      throw std::runtime_error(std::string("checkpoint block ") + name +
                               " has wrong size");
    }
    block = std::move(values);
  };
  load_block("embed", ckpt.params.embed);
  load_block("w_hidden", ckpt.params.w_hidden);
  load_block("b_hidden", ckpt.params.b_hidden);
  load_block("w_out", ckpt.params.w_out);
  load_block("b_out", ckpt.params.b_out);
  if (ckpt.vocab.size() != vocab_size) {
    throw std::runtime_error("checkpoint vocab size mismatch");
  }
  return ckpt;
}

std::string trace_to_csv(const TrainTrace& trace, std::string_view manifest_line) {
  std::string out;
  out += "# ";
  out += manifest_line;
  out += "\n";
  out += "step,epoch,example_id,nll,score,cutoff,kept\n";
  for (const StepRecord& r : trace.steps) {
    out += std::to_string(r.step);
    out += ',';
    out += std::to_string(r.epoch);
    out += ',';
    out += r.example_id;
    out += ',';
    out += format_double(r.nll);
    out += ',';
    out += format_double(r.score);
    out += ',';
    out += format_double(r.cutoff);
    out += ',';
    out += r.kept ? '1' : '0';
    out += '\n';
  }
  return out;
}

void save_trace_csv(const TrainTrace& trace, std::string_view manifest_line,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << trace_to_csv(trace, manifest_line);
}

std::string dumps_to_json(const TrainTrace& trace, const Corpus& corpus) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const Example& ex : corpus) ids.push_back(ex.id);
  j["ids"] = std::move(ids);
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const EpochNllDump& dump : trace.dumps) {
    nlohmann::ordered_json entry;
    entry["epoch"] = dump.epoch;
    entry["token_nlls"] = dump.token_nlls;
    epochs.push_back(std::move(entry));
  }
  j["epochs"] = std::move(epochs);
  return j.dump();
}

void save_dumps_json(const TrainTrace& trace, const Corpus& corpus,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dumps_to_json(trace, corpus);
}

std::vector<EpochNllDump> load_dumps_json(const std::filesystem::path& path,
                                          std::vector<std::string>* ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  if (ids) *ids = j.at("ids").get<std::vector<std::string>>();
  std::vector<EpochNllDump> dumps;
  for (const auto& entry : j.at("epochs")) {
    EpochNllDump dump;
    dump.epoch = entry.at("epoch").get<int>();
    dump.token_nlls = entry.at("token_nlls").get<std::vector<std::vector<double>>>();
    dumps.push_back(std::move(dump));
  }
  return dumps;
}

}  // namespace finelt
