#include "textmatch/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "textmatch/ops.hpp"
#include "textmatch/text.hpp"

namespace textmatch {

namespace {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = dist(rng);
  Tensor t = Tensor::from_values({fan_in, fan_out}, std::move(values));
  t.set_requires_grad(true);
  return t;
}

Tensor zero_bias(std::size_t width) {
  Tensor t = Tensor::zeros({1, width});
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config) {
  if (config_.vocab_size < 3) {
    throw std::invalid_argument("model: vocab size must cover the reserved ids");
  }
  if (config_.d == 0 || config_.d_p == 0 || config_.gcn_layers == 0) {
    throw std::invalid_argument("model: dimensions and depth must be positive");
  }

  // One generator consumed in fixed parameter order keeps initialization a
  // pure function of (config, seed).
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.d, d_p = config_.d_p;

  std::normal_distribution<double> embed_dist(0.0, 0.02);
  std::vector<double> embed(config_.vocab_size * d);
  for (double& v : embed) v = embed_dist(rng);
  embed_ = Tensor::from_values({config_.vocab_size, d}, std::move(embed));
  embed_.set_requires_grad(true);

  head_w1_ = xavier_uniform(d, d, rng);
  head_b1_ = zero_bias(d);
  head_w2_ = xavier_uniform(d, d, rng);
  head_b2_ = zero_bias(d);

  proj_w1_ = xavier_uniform(d, d_p, rng);
  proj_b1_ = zero_bias(d_p);
  proj_w2_ = xavier_uniform(d_p, d_p, rng);
  proj_b2_ = zero_bias(d_p);

  gcn_w_.reserve(config_.gcn_layers);
  for (std::size_t i = 0; i < config_.gcn_layers; ++i) {
    gcn_w_.push_back(xavier_uniform(d, d, rng));
  }

  cls_w_ = xavier_uniform(aggregate_dim(), 1, rng);
  cls_b_ = zero_bias(1);
}

Tensor Model::encode(std::span<const int> ids) const {
  Tensor pooled = embed_mean(embed_, ids, Vocabulary::kPadId);
  Tensor hidden = relu(add(matmul(pooled, head_w1_), head_b1_));
  return add(matmul(hidden, head_w2_), head_b2_);
}

Tensor Model::project(const Tensor& h) const {
  Tensor hidden = relu(add(matmul(h, proj_w1_), proj_b1_));
  return add(matmul(hidden, proj_w2_), proj_b2_);
}

Tensor Model::node_embeddings(std::span<const int> ids) const {
  if (ids.empty()) throw std::invalid_argument("node_embeddings: no ids");
  std::vector<Tensor> rows;
  rows.reserve(ids.size());
  for (const int id : ids) {
    // pad id -1 never matches, so every requested row is included as-is
    rows.push_back(embed_mean(embed_, std::span<const int>(&id, 1), -1));
  }
  return concat(rows, 0);
}

Tensor Model::gcn_forward(const Tensor& adj_norm, const Tensor& h0) const {
  if (adj_norm.rows() != adj_norm.cols() || adj_norm.rows() != h0.rows()) {
    throw std::invalid_argument("gcn_forward: adjacency " + shape_string(adj_norm.shape()) +
                                " does not match features " + shape_string(h0.shape()));
  }
  Tensor h = h0;
  for (const Tensor& w : gcn_w_) {
    h = relu(matmul(matmul(adj_norm, h), w));
  }
  return h;
}

Tensor Model::classify(const Tensor& h_final) const {
  return sigmoid(add(matmul(h_final, cls_w_), cls_b_));
}

std::vector<std::pair<std::string, Tensor>> Model::named_params() const {
  std::vector<std::pair<std::string, Tensor>> params{
      {"encoder.embed", embed_},   {"encoder.head.w1", head_w1_}, {"encoder.head.b1", head_b1_},
      {"encoder.head.w2", head_w2_}, {"encoder.head.b2", head_b2_}, {"proj.w1", proj_w1_},
      {"proj.b1", proj_b1_},       {"proj.w2", proj_w2_},         {"proj.b2", proj_b2_},
  };
  for (std::size_t i = 0; i < gcn_w_.size(); ++i) {
    params.emplace_back("gcn.w" + std::to_string(i), gcn_w_[i]);
  }
  params.emplace_back("classifier.w", cls_w_);
  params.emplace_back("classifier.b", cls_b_);
  return params;
}

std::vector<Tensor> Model::encoder_params() const {
  return {embed_, head_w1_, head_b1_, head_w2_, head_b2_};
}

std::vector<Tensor> Model::other_params(bool include_gcn, bool include_projection) const {
  std::vector<Tensor> params;
  if (include_projection) {
    params.insert(params.end(), {proj_w1_, proj_b1_, proj_w2_, proj_b2_});
  }
  if (include_gcn) {
    params.insert(params.end(), gcn_w_.begin(), gcn_w_.end());
  }
  params.insert(params.end(), {cls_w_, cls_b_});
  return params;
}

Tensor enhance(const Tensor& h, const Tensor& h_comp) {
  if (h.shape() != h_comp.shape()) {
    throw std::invalid_argument("enhance: shape mismatch " + shape_string(h.shape()) + " vs " +
                                shape_string(h_comp.shape()));
  }
  return concat({h, h_comp}, 1);
}

Tensor normalize_adjacency(const std::vector<double>& adjacency, std::size_t n) {
  if (adjacency.size() != n * n) {
    throw std::invalid_argument("normalize_adjacency: matrix size does not match node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = adjacency[i * n + j];
      if (w < 0.0) throw std::invalid_argument("normalize_adjacency: negative entry");
      if (w != adjacency[j * n + i]) {
        throw std::invalid_argument("normalize_adjacency: matrix is not symmetric");
      }
    }
  }
  std::vector<double> with_loops(adjacency);
  for (std::size_t i = 0; i < n; ++i) with_loops[i * n + i] += 1.0;

  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += with_loops[i * n + j];
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);  // self-loop keeps degree >= 1
  }
  // Fill the upper triangle and mirror so the result is symmetric to the
  // last bit, not only up to rounding.
  std::vector<double> normalized(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = inv_sqrt_degree[i] * with_loops[i * n + j] * inv_sqrt_degree[j];
      normalized[i * n + j] = v;
      normalized[j * n + i] = v;
    }
  }
  return Tensor::from_values({n, n}, std::move(normalized));
}

Tensor graph_pool(const Tensor& h_last) {
  return matmul(Tensor::full({1, h_last.rows()}, 1.0), h_last);
}

Tensor aggregate(const Tensor& h_e1, const Tensor& h_e2, const Tensor& h_graph) {
  return concat({h_e1, h_e2, abs_diff(h_e1, h_e2), h_graph}, 1);
}

}  // namespace textmatch
