#include "textmatch/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "textmatch/losses.hpp"
#include "textmatch/model.hpp"
#include "textmatch/ops.hpp"
#include "textmatch/tensor.hpp"
#include "textmatch/trainer.hpp"

namespace textmatch {

namespace {

constexpr double kStep = 1e-5;

/// Worst relative error between tape gradients and central differences
/// over every coordinate of every listed parameter. `f` must rebuild the
/// scalar loss from the parameters' current values on each call.
double max_rel_error(const std::vector<Tensor>& params, const std::function<Tensor()>& f) {
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = f();
  }
  tape.backward(loss);

  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const Tensor& p : params) {
    if (p.has_grad()) {
      grads.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      grads.emplace_back(p.numel(), 0.0);  // unused by f, so the true gradient is zero
    }
  }

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + kStep;
      const double up = f().value();
      values[i] = saved - kStep;
      const double down = f().value();
      values[i] = saved;
      const double fd = (up - down) / (2.0 * kStep);
      const double analytic = grads[pi][i];
      const double rel =
          std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

Tensor leaf(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> values(shape[0] * shape[1]);
  for (double& v : values) v = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(values)).set_requires_grad(true);
}

/// Magnitudes in [0.2, 1.0] with random sign, so x +- kStep cannot cross a
/// relu or abs kink.
Tensor kink_safe_leaf(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::vector<double> values(shape[0] * shape[1]);
  for (double& v : values) v = (rng() % 2 == 0 ? 1.0 : -1.0) * mag(rng);
  return Tensor::from_values(std::move(shape), std::move(values)).set_requires_grad(true);
}

void widen_init(const Model& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.6, 0.6);
  for (const auto& [name, tensor] : model.named_params()) {
    Tensor handle = tensor;
    for (double& v : handle.mutable_values()) v = dist(rng);
  }
}

std::vector<Tensor> collect(const std::vector<std::pair<std::string, Tensor>>& named) {
  std::vector<Tensor> params;
  params.reserve(named.size());
  for (const auto& [name, tensor] : named) params.push_back(tensor);
  return params;
}

}  // namespace

std::vector<GradCheckReport> run_gradient_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckReport> reports;
  const auto run_case = [&](std::string name, const std::vector<Tensor>& params,
                       std::function<Tensor()> f) {
    GradCheckReport report;
    report.name = std::move(name);
    report.max_rel_err = max_rel_error(params, f);
    report.passed = report.max_rel_err < kGradCheckTolerance;
    reports.push_back(std::move(report));
  };

  {
    Tensor a = leaf({3, 4}, rng, -1.0, 1.0), b = leaf({4, 2}, rng, -1.0, 1.0);
    run_case("matmul", {a, b}, [=] { return sum(matmul(a, b)); });
  }
  {
    Tensor x = kink_safe_leaf({2, 5}, rng);
    run_case("relu", {x}, [=] { return sum(relu(x)); });
  }
  {
    Tensor x = leaf({2, 4}, rng, -2.0, 2.0);
    run_case("sigmoid", {x}, [=] { return sum(sigmoid(x)); });
  }
  {
    Tensor a = leaf({2, 3}, rng, -1.0, 1.0), b = leaf({2, 3}, rng, -1.0, 1.0);
    run_case("add_sub_scale", {a, b}, [=] { return sum(sub(scale(add(a, b), 0.7), scale(b, 1.3))); });
  }
  {
    Tensor a = leaf({2, 3}, rng, -1.0, 1.0);
    std::uniform_real_distribution<double> gap(0.3, 0.9);
    std::vector<double> shifted(a.values().begin(), a.values().end());
    for (double& v : shifted) v += (rng() % 2 == 0 ? 1.0 : -1.0) * gap(rng);
    Tensor b = Tensor::from_values({2, 3}, std::move(shifted)).set_requires_grad(true);
    run_case("abs_diff", {a, b}, [=] { return sum(abs_diff(a, b)); });
  }
  {
    Tensor a = leaf({2, 3}, rng, -1.0, 1.0), b = leaf({2, 2}, rng, -1.0, 1.0);
    run_case("concat_cols", {a, b}, [=] { return sum(sigmoid(concat({a, b}, 1))); });
  }
  {
    Tensor a = leaf({1, 3}, rng, -1.0, 1.0), b = leaf({2, 3}, rng, -1.0, 1.0);
    run_case("concat_rows", {a, b}, [=] { return sum(sigmoid(concat({a, b}, 0))); });
  }
  {
    Tensor a = kink_safe_leaf({1, 6}, rng), b = kink_safe_leaf({1, 6}, rng);
    run_case("cosine_sim", {a, b}, [=] { return cosine_sim(a, b); });
  }
  {
    Tensor x = leaf({2, 4}, rng, -1.0, 1.0);
    run_case("logsumexp", {x}, [=] { return logsumexp(x); });
  }
  {
    Tensor table = leaf({7, 4}, rng, -1.0, 1.0);
    const std::vector<int> ids{2, 4, 1, 6, 4};
    run_case("embed_mean", {table}, [=] { return sum(sigmoid(embed_mean(table, ids, 1))); });
  }
  {
    Tensor probs = leaf({1, 5}, rng, 0.2, 0.8);
    const std::vector<double> labels{1.0, 0.0, 1.0, 1.0, 0.0};
    run_case("bce_sum", {probs}, [=] { return bce_sum(probs, labels); });
  }

  ModelConfig config;
  config.vocab_size = 9;
  config.d = 6;
  config.d_p = 6;
  config.gcn_layers = 2;
  const Model model(config, seed);
  widen_init(model, rng);

  {
    const std::vector<int> ids{2, 3, 4, 5};
    run_case("encoder", model.encoder_params(), [&model, ids] {
      return sum(sigmoid(model.encode(ids)));
    });
  }
  {
    Tensor h = leaf({1, 6}, rng, -1.0, 1.0);
    std::vector<Tensor> params = model.other_params(false, true);
    params.push_back(h);
    run_case("projection", params, [&model, h] { return sum(sigmoid(model.project(h))); });
  }
  {
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::vector<double> adjacency(4 * 4, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        if (rng() % 2 == 0) adjacency[i * 4 + j] = adjacency[j * 4 + i] = weight(rng);
      }
    }
    Tensor adj = normalize_adjacency(adjacency, 4);
    Tensor h0 = leaf({4, 6}, rng, -1.0, 1.0);
    std::vector<Tensor> params = model.other_params(true, false);
    params.push_back(h0);
    run_case("gcn", params, [&model, adj, h0] { return sum(model.gcn_forward(adj, h0)); });
  }
  {
    Tensor z = leaf({1, model.aggregate_dim()}, rng, -1.0, 1.0);
    std::vector<Tensor> params = model.other_params(false, false);
    params.push_back(z);
    run_case("classifier", params, [&model, z] { return model.classify(z); });
  }
  {
    std::vector<Tensor> anchors, positives;
    for (int i = 0; i < 3; ++i) {
      anchors.push_back(kink_safe_leaf({1, 5}, rng));
      positives.push_back(kink_safe_leaf({1, 5}, rng));
    }
    std::vector<Tensor> params = anchors;
    params.insert(params.end(), positives.begin(), positives.end());
    run_case("info_nce", params, [=] { return info_nce(anchors, positives, 0.2); });
  }

  // End to end: a four-pair batch through encoding, enhancement, the
  // knowledge-graph branch, classification, and both contrastive terms.
  {
    std::vector<SentencePair> pairs{
        {"red apple tree", "green apple plant", "ripe apple branch", "green leaf plant", 1},
        {"fast car engine", "slow truck wheel", "fast auto motor", "slow lorry tire", 0},
        {"red fruit basket", "green salad bowl", "red berry basket", "green herb bowl", 1},
        {"fast train track", "green garden path", "fast rail line", "green lawn path", 0},
    };
    std::vector<std::vector<std::string>> documents;
    for (const SentencePair& pair : pairs) {
      documents.push_back(tokenize(pair.s1));
      documents.push_back(tokenize(pair.s2));
      documents.push_back(tokenize(pair.s1_comp));
      documents.push_back(tokenize(pair.s2_comp));
    }
    const Vocabulary vocab = Vocabulary::build(documents);
    const std::unordered_set<std::string> stopwords;
    LexicalStore store;
    store.add("red", "color", 0.7);
    store.add("green", "color", 0.7);
    store.add("fast", "speed", 0.8);
    store.add("slow", "speed", 0.8);
    store.add("apple", "fruit", 0.9);
    store.add("car", "vehicle", 0.9);

    ModelConfig pipeline_config;
    pipeline_config.vocab_size = vocab.size();
    pipeline_config.d = 8;
    pipeline_config.d_p = 8;
    pipeline_config.gcn_layers = 2;
    const Model pipeline_model(pipeline_config, seed + 1);
    widen_init(pipeline_model, rng);

    const ForwardOptions options;
    run_case("batch_loss", collect(pipeline_model.named_params()),
        [&pipeline_model, pairs, &vocab, &stopwords, &store, options] {
          return batch_losses(pipeline_model, pairs, vocab, stopwords, store, options).total;
        });
  }

  return reports;
}

bool all_passed(const std::vector<GradCheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const GradCheckReport& r) { return r.passed; });
}

}  // namespace textmatch
