#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "textmatch/tensor.hpp"

namespace textmatch {

struct LossConfig {
  double alpha = 0.8;  // binary term weight
  double beta = 0.1;   // first contrastive term weight
  double gamma = 0.1;  // second contrastive term weight
  double tau = 0.1;    // similarity temperature
};

/// In-batch contrastive loss: row i scores anchor i against every positive
/// by cosine similarity over tau; the loss is the summed difference between
/// each row's log-sum-exp and its aligned positive logit. A batch of one is
/// exactly zero.
Tensor info_nce(std::span<const Tensor> anchors, std::span<const Tensor> positives, double tau);

/// Variant with a separate candidate list for the denominator, for the
/// reading where negatives come from a different representation space than
/// the aligned positive.
Tensor info_nce_with_candidates(std::span<const Tensor> anchors,
                                std::span<const Tensor> positives,
                                std::span<const Tensor> candidates, double tau);

/// Same quantity computed from a precomputed similarity matrix
/// (sims[i][j] between anchor i and positive j) in plain doubles.
double info_nce_value(const std::vector<std::vector<double>>& sims, double tau);

/// alpha * binary + beta * contrast1 + gamma * contrast2, on the tape.
Tensor composite_loss(const Tensor& l_bin, const Tensor& l_c1, const Tensor& l_c2,
                      const LossConfig& config);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  /// Probability at or above the threshold counts as a positive prediction.
  void update(double probability, int label, double threshold);
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct Metrics {
  double acc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Accuracy, precision, recall, F1, with the zero-denominator conventions
/// precision = 0, recall = 0, f1 = 0. An empty matrix is a caller error.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// One-line JSON record with fixed 4-decimal values, e.g.
/// {"acc":0.7000,"precision":0.7500,"recall":0.6000,"f1":0.6667,"n":10}
std::string metrics_json(const Metrics& metrics, std::size_t n);

}  // namespace textmatch
