#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "textmatch/checkpoint.hpp"
#include "textmatch/config.hpp"
#include "textmatch/data.hpp"
#include "textmatch/knowledge.hpp"
#include "textmatch/losses.hpp"
#include "textmatch/model.hpp"
#include "textmatch/optim.hpp"
#include "textmatch/text.hpp"
#include "textmatch/textrank.hpp"

namespace textmatch {

/// Per-forward knobs, distilled from RunConfig so the forward pass does not
/// depend on file paths or optimizer settings.
struct ForwardOptions {
  TextRankOptions textrank;
  std::size_t top_k = 5;
  std::size_t max_tokens = 64;
  LossConfig loss;
  double threshold = 0.5;
  bool no_graph = false;
  bool no_contrastive = false;
};

ForwardOptions forward_options(const RunConfig& config);
ModelConfig model_config(const RunConfig& config, std::size_t vocab_size);

/// Keyword extraction and graph construction are pure in (s1, s2), so their
/// structural results — node ids and the normalized adjacency — can be
/// reused across epochs. Node features are recomputed every time because
/// the embedding table moves.
class GraphCache {
 public:
  struct Entry {
    std::vector<int> node_ids;
    Tensor adj_norm;
  };

  const Entry* find(const std::string& s1, const std::string& s2) const;
  void put(const std::string& s1, const std::string& s2, Entry entry);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, Entry> entries_;
};

struct BatchLosses {
  Tensor total;
  Tensor l_bin;
  Tensor l_c1;
  Tensor l_c2;
};

/// One full forward over a batch of provisioned pairs: encode all four
/// sentences, form enhanced vectors, run the knowledge-graph branch (or a
/// zero vector under no_graph), classify, and add the two in-batch
/// contrastive terms over the projected vectors (exact zeros under
/// no_contrastive). Record on a tape by calling inside a TapeScope.
BatchLosses batch_losses(const Model& model, std::span<const SentencePair> batch,
                         const Vocabulary& vocab,
                         const std::unordered_set<std::string>& stopwords,
                         const LexicalStore& store, const ForwardOptions& options,
                         GraphCache* cache = nullptr);

/// Frozen-model confusion-matrix metrics over `pairs`; call with no tape
/// active.
Metrics evaluate_model(const Model& model, std::span<const SentencePair> pairs,
                       const Vocabulary& vocab,
                       const std::unordered_set<std::string>& stopwords,
                       const LexicalStore& store, const ForwardOptions& options,
                       GraphCache* cache = nullptr);

struct BatchRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 1-based within the epoch
  double l_bin = 0.0;
  double l_c1 = 0.0;
  double l_c2 = 0.0;
  double l_total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  Metrics valid;
  bool improved = false;
};

struct TrainResult {
  std::vector<BatchRecord> batches;
  std::vector<EpochRecord> epochs;
  double best_acc = -1.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool early_stopped = false;
};

/// Everything needed to continue a run where it stopped. save/load
/// round-trip bit-exactly; the RNG is stored in its textual stream form.
struct TrainState {
  std::uint64_t epoch = 0;
  double best_acc = -1.0;
  std::uint64_t best_epoch = 0;
  std::uint64_t stale_epochs = 0;  // consecutive epochs without improvement
  std::string rng_text;
  std::vector<NamedTensorData> params;
  std::string optimizer_blob;
};

void save_train_state(const std::string& path, const TrainState& state);
TrainState load_train_state(const std::string& path);

/// Owns the model, optimizer, and epoch loop. Pairs must arrive with
/// complements already provisioned; the vocabulary is built here from the
/// training pairs (all four sentences). When config.out_dir is set the run
/// writes vocab.txt, best.ckpt, best.ckpt.json, and state.bin there.
class Trainer {
 public:
  Trainer(RunConfig config, std::vector<SentencePair> train, std::vector<SentencePair> valid,
          std::unordered_set<std::string> stopwords, LexicalStore store);

  /// Runs epochs until the schedule ends, early stopping triggers, or
  /// `epoch_limit` (absolute epoch number, 0 = no limit) is reached. Batch
  /// lines go to `batch_log` as
  /// `epoch<TAB>batch<TAB>L_bin<TAB>L_c1<TAB>L_c2<TAB>L_total` with six
  /// decimals; epoch summaries go to `info`. Callable again to continue.
  TrainResult run(std::ostream& batch_log, std::ostream& info, std::size_t epoch_limit = 0);

  const Model& model() const { return model_; }
  const Vocabulary& vocab() const { return vocab_; }
  const RunConfig& config() const { return config_; }
  double best_acc() const { return best_acc_; }
  std::size_t best_epoch() const { return best_epoch_; }

  /// Copies the best-epoch parameter values back into the live model.
  void load_best();

  TrainState state() const;
  void restore(const TrainState& state);

 private:
  void check_finite(const BatchRecord& record) const;
  void write_static_artifacts() const;

  RunConfig config_;
  std::vector<SentencePair> train_;
  std::vector<SentencePair> valid_;
  std::unordered_set<std::string> stopwords_;
  LexicalStore store_;
  Vocabulary vocab_;
  Model model_;
  AdamW optimizer_;
  ForwardOptions forward_;
  GraphCache cache_;
  std::mt19937_64 shuffle_rng_;

  std::size_t epochs_done_ = 0;
  double best_acc_ = -1.0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_epochs_ = 0;
  std::vector<std::vector<double>> best_values_;
};

}  // namespace textmatch
