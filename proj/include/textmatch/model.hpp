#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "textmatch/tensor.hpp"

namespace textmatch {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d = 64;        // sentence embedding width
  std::size_t d_p = 64;      // projection width for the contrastive branch
  std::size_t gcn_layers = 2;
};

/// All trainable parts: a shared sentence encoder (mean-pooled embeddings
/// plus a two-layer head), one projection head reused for every contrastive
/// input, a GCN stack over the knowledge graph, and the sigmoid classifier.
/// Parameter tensors are created once; handles returned by the accessors
/// share that storage.
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t graph_dim() const { return config_.d; }
  std::size_t aggregate_dim() const { return 6 * config_.d + graph_dim(); }

  /// Sentence vector (1 x d) from reserved-id-prefixed token ids; the mean
  /// skips padding.
  Tensor encode(std::span<const int> ids) const;

  /// Contrastive-branch projection (1 x d_p) of a sentence vector.
  Tensor project(const Tensor& h) const;

  /// One embedding-table row per id (n x d); shares the encoder's table so
  /// gradients reach it. Unlike encode(), nothing is skipped or pooled.
  Tensor node_embeddings(std::span<const int> ids) const;

  /// Stacked relu(adj_norm * H * W) layers over node features (n x d).
  Tensor gcn_forward(const Tensor& adj_norm, const Tensor& h0) const;

  /// Match probability in (0, 1) from the aggregated feature row.
  Tensor classify(const Tensor& h_final) const;

  /// Parameters in a fixed order with stable names ("encoder.embed",
  /// "gcn.w0", ...); tensor handles share the model's storage.
  std::vector<std::pair<std::string, Tensor>> named_params() const;

  /// Embedding table plus encoder head — the slower-moving group under the
  /// two-rate optimizer setup.
  std::vector<Tensor> encoder_params() const;

  /// Everything else. Branches disabled by ablation must be excluded so the
  /// optimizer does not demand gradients for parameters outside the loss.
  std::vector<Tensor> other_params(bool include_gcn, bool include_projection) const;

 private:
  ModelConfig config_;
  Tensor embed_;  // vocab x d
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;
  Tensor proj_w1_, proj_b1_, proj_w2_, proj_b2_;
  std::vector<Tensor> gcn_w_;
  Tensor cls_w_, cls_b_;
};

/// [h; h_comp] — the enhanced sentence representation (1 x 2d).
Tensor enhance(const Tensor& h, const Tensor& h_comp);

/// Symmetric normalization with self-loops, computed outside the tape:
/// D^{-1/2} (A + I) D^{-1/2} as a constant tensor. `adjacency` is a dense
/// row-major n x n matrix that must be symmetric and non-negative.
Tensor normalize_adjacency(const std::vector<double>& adjacency, std::size_t n);

/// Sum of all node rows (1 x d).
Tensor graph_pool(const Tensor& h_last);

/// [h_e1; h_e2; |h_e1 - h_e2|; h_graph] in that order.
Tensor aggregate(const Tensor& h_e1, const Tensor& h_e2, const Tensor& h_graph);

}  // namespace textmatch
