#include "textmatch/trainer.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "textmatch/errors.hpp"
#include "textmatch/ops.hpp"
#include "textmatch/tensor.hpp"

static_assert(std::endian::native == std::endian::little,
              "train-state I/O writes raw little-endian words");

namespace textmatch {

ForwardOptions forward_options(const RunConfig& config) {
  ForwardOptions options;
  options.textrank.window = config.window;
  options.textrank.damping = config.damping;
  options.top_k = config.top_k;
  options.max_tokens = config.max_tokens;
  options.loss = LossConfig{config.alpha, config.beta, config.gamma, config.tau};
  options.threshold = config.threshold;
  options.no_graph = config.no_graph;
  options.no_contrastive = config.no_contrastive;
  return options;
}

ModelConfig model_config(const RunConfig& config, std::size_t vocab_size) {
  ModelConfig model;
  model.vocab_size = vocab_size;
  model.d = config.d;
  model.d_p = config.d_p;
  model.gcn_layers = config.gcn_layers;
  return model;
}

const GraphCache::Entry* GraphCache::find(const std::string& s1, const std::string& s2) const {
  const auto it = entries_.find({s1, s2});
  return it == entries_.end() ? nullptr : &it->second;
}

void GraphCache::put(const std::string& s1, const std::string& s2, Entry entry) {
  entries_.insert_or_assign({s1, s2}, std::move(entry));
}

namespace {

/// Pooled knowledge-graph vector (1 x d) for one sentence pair.
Tensor graph_vector(const Model& model, const SentencePair& pair, const Vocabulary& vocab,
                    const std::unordered_set<std::string>& stopwords, const LexicalStore& store,
                    const ForwardOptions& options, GraphCache* cache) {
  GraphCache::Entry fresh;
  const GraphCache::Entry* entry =
      cache != nullptr ? cache->find(pair.s1, pair.s2) : nullptr;
  if (entry == nullptr) {
    const std::string k1 =
        extract_keyword(tokenize(pair.s1), stopwords, options.textrank).keyword;
    const std::string k2 =
        extract_keyword(tokenize(pair.s2), stopwords, options.textrank).keyword;
    const KnowledgeGraph graph = build_graph(k1, k2, store, options.top_k);
    fresh.node_ids.reserve(graph.size());
    for (const std::string& word : graph.node_words) {
      fresh.node_ids.push_back(vocab.id(word));
    }
    fresh.adj_norm = normalize_adjacency(graph.adjacency, graph.size());
    if (cache != nullptr) {
      cache->put(pair.s1, pair.s2, fresh);
      entry = cache->find(pair.s1, pair.s2);
    } else {
      entry = &fresh;
    }
  }
  const Tensor h0 = model.node_embeddings(entry->node_ids);
  return graph_pool(model.gcn_forward(entry->adj_norm, h0));
}

struct PairForward {
  Tensor prob;  // 1 x 1
  Tensor h1, h1c, h2, h2c;
};

PairForward pair_forward(const Model& model, const SentencePair& pair, const Vocabulary& vocab,
                         const std::unordered_set<std::string>& stopwords,
                         const LexicalStore& store, const ForwardOptions& options,
                         GraphCache* cache) {
  if (pair.s1_comp.empty() || pair.s2_comp.empty()) {
    throw std::invalid_argument("forward: sentence pair has no complements provisioned");
  }
  const auto encode = [&](const std::string& sentence) {
    return model.encode(encode_ids(vocab, tokenize(sentence), options.max_tokens));
  };

  PairForward out;
  out.h1 = encode(pair.s1);
  out.h1c = encode(pair.s1_comp);
  out.h2 = encode(pair.s2);
  out.h2c = encode(pair.s2_comp);

  const Tensor he1 = enhance(out.h1, out.h1c);
  const Tensor he2 = enhance(out.h2, out.h2c);
  const Tensor hg = options.no_graph
                        ? Tensor::zeros({1, model.graph_dim()})
                        : graph_vector(model, pair, vocab, stopwords, store, options, cache);
  out.prob = model.classify(aggregate(he1, he2, hg));
  return out;
}

}  // namespace

BatchLosses batch_losses(const Model& model, std::span<const SentencePair> batch,
                         const Vocabulary& vocab,
                         const std::unordered_set<std::string>& stopwords,
                         const LexicalStore& store, const ForwardOptions& options,
                         GraphCache* cache) {
  if (batch.empty()) throw std::invalid_argument("batch_losses: empty batch");

  std::vector<Tensor> probs, anchors1, positives1, anchors2, positives2;
  std::vector<double> labels;
  probs.reserve(batch.size());
  labels.reserve(batch.size());
  for (const SentencePair& pair : batch) {
    PairForward f = pair_forward(model, pair, vocab, stopwords, store, options, cache);
    probs.push_back(f.prob);
    labels.push_back(static_cast<double>(pair.label));
    if (!options.no_contrastive) {
      anchors1.push_back(model.project(f.h1));
      positives1.push_back(model.project(f.h1c));
      anchors2.push_back(model.project(f.h2));
      positives2.push_back(model.project(f.h2c));
    }
  }

  BatchLosses losses;
  losses.l_bin = bce_sum(concat(probs, 1), labels);
  if (options.no_contrastive) {
    losses.l_c1 = Tensor::scalar(0.0);
    losses.l_c2 = Tensor::scalar(0.0);
  } else {
    losses.l_c1 = info_nce(anchors1, positives1, options.loss.tau);
    losses.l_c2 = info_nce(anchors2, positives2, options.loss.tau);
  }
  losses.total = composite_loss(losses.l_bin, losses.l_c1, losses.l_c2, options.loss);
  return losses;
}

Metrics evaluate_model(const Model& model, std::span<const SentencePair> pairs,
                       const Vocabulary& vocab,
                       const std::unordered_set<std::string>& stopwords,
                       const LexicalStore& store, const ForwardOptions& options,
                       GraphCache* cache) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_model: empty pair list");
  ConfusionMatrix cm;
  for (const SentencePair& pair : pairs) {
    const PairForward f = pair_forward(model, pair, vocab, stopwords, store, options, cache);
    cm.update(f.prob.value(), pair.label, options.threshold);
  }
  return compute_metrics(cm);
}

namespace {

constexpr char kStateMagic[4] = {'T', 'M', 'S', 'T'};
constexpr std::uint32_t kStateVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_blob(std::ostream& out, const std::string& blob) {
  write_u64(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("truncated train state: " + path);
  return v;
}
std::uint64_t read_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("truncated train state: " + path);
  return v;
}
double read_f64(std::istream& in, const std::string& path) {
  double v = 0.0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("truncated train state: " + path);
  return v;
}
std::string read_blob(std::istream& in, const std::string& path) {
  const std::uint64_t size = read_u64(in, path);
  std::string blob(size, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(size));
  if (!in) throw DataError("truncated train state: " + path);
  return blob;
}

}  // namespace

void save_train_state(const std::string& path, const TrainState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write train state: " + path);
  out.write(kStateMagic, sizeof(kStateMagic));
  write_u32(out, kStateVersion);
  write_u64(out, state.epoch);
  write_f64(out, state.best_acc);
  write_u64(out, state.best_epoch);
  write_u64(out, state.stale_epochs);
  write_blob(out, state.rng_text);
  write_u64(out, state.params.size());
  for (const NamedTensorData& param : state.params) {
    write_blob(out, param.name);
    write_u32(out, static_cast<std::uint32_t>(param.shape.size()));
    for (std::size_t dim : param.shape) write_u64(out, dim);
    out.write(reinterpret_cast<const char*>(param.values.data()),
              static_cast<std::streamsize>(param.values.size() * sizeof(double)));
  }
  write_blob(out, state.optimizer_blob);
  if (!out) throw DataError("failed writing train state: " + path);
}

TrainState load_train_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open train state: " + path);
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, 4) != std::string_view(kStateMagic, 4)) {
    throw DataError("not a train-state file: " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kStateVersion) {
    throw DataError("unsupported train-state version " + std::to_string(version) + ": " + path);
  }
  TrainState state;
  state.epoch = read_u64(in, path);
  state.best_acc = read_f64(in, path);
  state.best_epoch = read_u64(in, path);
  state.stale_epochs = read_u64(in, path);
  state.rng_text = read_blob(in, path);
  const std::uint64_t count = read_u64(in, path);
  state.params.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensorData param;
    param.name = read_blob(in, path);
    const std::uint32_t rank = read_u32(in, path);
    param.shape.resize(rank);
    std::size_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      param.shape[r] = static_cast<std::size_t>(read_u64(in, path));
      numel *= param.shape[r];
    }
    param.values.resize(numel);
    in.read(reinterpret_cast<char*>(param.values.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!in) throw DataError("truncated train state: " + path);
    state.params.push_back(std::move(param));
  }
  state.optimizer_blob = read_blob(in, path);
  return state;
}

namespace {

Vocabulary build_vocabulary(const std::vector<SentencePair>& pairs, std::size_t min_count) {
  std::vector<std::vector<std::string>> documents;
  documents.reserve(pairs.size() * 4);
  for (const SentencePair& pair : pairs) {
    documents.push_back(tokenize(pair.s1));
    documents.push_back(tokenize(pair.s2));
    documents.push_back(tokenize(pair.s1_comp));
    documents.push_back(tokenize(pair.s2_comp));
  }
  return Vocabulary::build(documents, min_count);
}

void fisher_yates(std::vector<std::size_t>& indices, std::mt19937_64& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(indices[i - 1], indices[j]);
  }
}

void require_provisioned(const std::vector<SentencePair>& pairs, const char* which) {
  for (const SentencePair& pair : pairs) {
    if (pair.s1_comp.empty() || pair.s2_comp.empty()) {
      throw std::invalid_argument(std::string("trainer: ") + which +
                                  " pairs need complements provisioned first");
    }
  }
}

RunConfig validated(RunConfig config) {
  validate_config(config);
  return config;
}

}  // namespace

Trainer::Trainer(RunConfig config, std::vector<SentencePair> train,
                 std::vector<SentencePair> valid, std::unordered_set<std::string> stopwords,
                 LexicalStore store)
    : config_(validated(std::move(config))),
      train_(std::move(train)),
      valid_(std::move(valid)),
      stopwords_(std::move(stopwords)),
      store_(std::move(store)),
      vocab_((require_provisioned(train_, "training"),
              build_vocabulary(train_, config_.min_count))),
      model_(model_config(config_, vocab_.size()), config_.seed),
      optimizer_(AdamWOptions{.weight_decay = config_.weight_decay}),
      forward_(forward_options(config_)),
      shuffle_rng_(config_.seed) {
  if (train_.empty()) throw std::invalid_argument("trainer: empty training set");
  if (valid_.empty()) throw std::invalid_argument("trainer: empty validation set");
  require_provisioned(valid_, "validation");

  optimizer_.add_group(model_.encoder_params(), config_.lr_encoder);
  optimizer_.add_group(model_.other_params(!config_.no_graph, !config_.no_contrastive),
                       config_.lr_rest);
}

void Trainer::check_finite(const BatchRecord& record) const {
  if (std::isfinite(record.l_total) && std::isfinite(record.l_bin) &&
      std::isfinite(record.l_c1) && std::isfinite(record.l_c2)) {
    return;
  }
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer),
                "training diverged at epoch %zu batch %zu: L_bin=%g L_c1=%g L_c2=%g L_total=%g",
                record.epoch, record.batch, record.l_bin, record.l_c1, record.l_c2,
                record.l_total);
  throw std::runtime_error(buffer);
}

void Trainer::write_static_artifacts() const {
  if (config_.out_dir.empty()) return;
  const std::filesystem::path dir(config_.out_dir);
  std::filesystem::create_directories(dir);
  vocab_.save((dir / "vocab.txt").string());
  std::ofstream sidecar(dir / "best.ckpt.json", std::ios::trunc);
  if (!sidecar) throw DataError("cannot write checkpoint sidecar in " + config_.out_dir);
  sidecar << config_json(config_);
}

TrainResult Trainer::run(std::ostream& batch_log, std::ostream& info, std::size_t epoch_limit) {
  if (epochs_done_ == 0) write_static_artifacts();

  TrainResult result;
  const std::size_t last_epoch =
      epoch_limit == 0 ? config_.epochs : std::min(config_.epochs, epoch_limit);
  GraphCache* cache = config_.cache_graphs ? &cache_ : nullptr;

  std::vector<std::size_t> order(train_.size());

  for (std::size_t epoch = epochs_done_ + 1; epoch <= last_epoch; ++epoch) {
    if (stale_epochs_ >= config_.patience) break;
    // Re-derive each epoch's permutation from the identity so a resumed run
    // shuffles identically to an uninterrupted one.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    fisher_yates(order, shuffle_rng_);

    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), start + config_.batch_size);
      std::vector<SentencePair> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_[order[i]]);

      Tape tape;
      BatchLosses losses;
      {
        TapeScope scope(tape);
        losses = batch_losses(model_, batch, vocab_, stopwords_, store_, forward_, cache);
      }

      BatchRecord record{epoch,
                         batch_no,
                         losses.l_bin.value(),
                         losses.l_c1.value(),
                         losses.l_c2.value(),
                         losses.total.value()};
      check_finite(record);
      tape.backward(losses.total);
      optimizer_.step();

      char line[192];
      std::snprintf(line, sizeof(line), "%zu\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", record.epoch,
                    record.batch, record.l_bin, record.l_c1, record.l_c2, record.l_total);
      batch_log << line;
      result.batches.push_back(record);
    }

    const Metrics metrics =
        evaluate_model(model_, valid_, vocab_, stopwords_, store_, forward_, cache);
    const bool improved = metrics.acc > best_acc_;
    if (improved) {
      best_acc_ = metrics.acc;
      best_epoch_ = epoch;
      stale_epochs_ = 0;
      best_values_.clear();
      for (const auto& [name, tensor] : model_.named_params()) {
        best_values_.emplace_back(tensor.values().begin(), tensor.values().end());
      }
      if (!config_.out_dir.empty()) {
        const std::filesystem::path dir(config_.out_dir);
        save_checkpoint((dir / "best.ckpt").string(), model_.named_params());
      }
    } else {
      ++stale_epochs_;
    }

    epochs_done_ = epoch;
    result.epochs.push_back({epoch, metrics, improved});
    info << "epoch " << epoch << " valid " << metrics_json(metrics, valid_.size())
         << (improved ? " *" : "") << "\n";

    if (stale_epochs_ >= config_.patience) {
      result.early_stopped = true;
      info << "early stop after epoch " << epoch << " (" << config_.patience
           << " epochs without improvement)\n";
      break;
    }
  }

  result.best_acc = best_acc_;
  result.best_epoch = best_epoch_;
  result.epochs_run = epochs_done_;
  if (!config_.out_dir.empty()) {
    save_train_state((std::filesystem::path(config_.out_dir) / "state.bin").string(), state());
  }
  return result;
}

void Trainer::load_best() {
  if (best_values_.empty()) throw std::logic_error("load_best: no best epoch recorded yet");
  const auto params = model_.named_params();
  if (params.size() != best_values_.size()) {
    throw std::logic_error("load_best: parameter count changed");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor tensor = params[i].second;
    std::copy(best_values_[i].begin(), best_values_[i].end(), tensor.mutable_values().begin());
  }
}

TrainState Trainer::state() const {
  TrainState state;
  state.epoch = epochs_done_;
  state.best_acc = best_acc_;
  state.best_epoch = best_epoch_;
  state.stale_epochs = stale_epochs_;

  std::ostringstream rng;
  rng << shuffle_rng_;
  state.rng_text = rng.str();

  for (const auto& [name, tensor] : model_.named_params()) {
    NamedTensorData data;
    data.name = name;
    data.shape = tensor.shape();
    data.values.assign(tensor.values().begin(), tensor.values().end());
    state.params.push_back(std::move(data));
  }

  std::ostringstream optimizer;
  optimizer_.save_state(optimizer);
  state.optimizer_blob = optimizer.str();
  return state;
}

void Trainer::restore(const TrainState& state) {
  const auto params = model_.named_params();
  if (params.size() != state.params.size()) {
    throw DataError("train state restore: expected " + std::to_string(params.size()) +
                    " parameters, found " + std::to_string(state.params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = params[i];
    const NamedTensorData& saved = state.params[i];
    if (saved.name != name || saved.shape != tensor.shape()) {
      throw DataError("train state restore: parameter mismatch at '" + saved.name + "'");
    }
    Tensor handle = tensor;
    std::copy(saved.values.begin(), saved.values.end(), handle.mutable_values().begin());
  }

  std::istringstream rng(state.rng_text);
  rng >> shuffle_rng_;
  if (!rng) throw DataError("train state restore: bad RNG text");

  std::istringstream optimizer(state.optimizer_blob);
  optimizer_.load_state(optimizer);

  epochs_done_ = static_cast<std::size_t>(state.epoch);
  best_acc_ = state.best_acc;
  best_epoch_ = static_cast<std::size_t>(state.best_epoch);
  stale_epochs_ = static_cast<std::size_t>(state.stale_epochs);

  // The restored parameters stand in for the best snapshot until the next
  // improvement; a resumed run otherwise could not serve load_best().
  best_values_.clear();
  for (const NamedTensorData& saved : state.params) {
    best_values_.push_back(saved.values);
  }
}

}  // namespace textmatch
