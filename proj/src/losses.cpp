#include "textmatch/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "textmatch/ops.hpp"

namespace textmatch {

Tensor info_nce_with_candidates(std::span<const Tensor> anchors,
                                std::span<const Tensor> positives,
                                std::span<const Tensor> candidates, double tau) {
  if (anchors.empty()) throw std::invalid_argument("info_nce: empty batch");
  if (anchors.size() != positives.size() || anchors.size() != candidates.size()) {
    throw std::invalid_argument("info_nce: anchor/positive/candidate counts differ");
  }
  if (tau <= 0.0) throw std::invalid_argument("info_nce: temperature must be positive");

  const double inv_tau = 1.0 / tau;
  Tensor loss;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    std::vector<Tensor> row;
    row.reserve(candidates.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      row.push_back(scale(cosine_sim(anchors[i], candidates[j]), inv_tau));
    }
    const Tensor positive_logit =
        candidates.data() == positives.data()
            ? row[i]  // reuse the exact denominator term so B=1 cancels bit-for-bit
            : scale(cosine_sim(anchors[i], positives[i]), inv_tau);
    Tensor term = sub(logsumexp(concat(row, 1)), positive_logit);
    loss = i == 0 ? term : add(loss, term);
  }
  return loss;
}

Tensor info_nce(std::span<const Tensor> anchors, std::span<const Tensor> positives, double tau) {
  return info_nce_with_candidates(anchors, positives, positives, tau);
}

double info_nce_value(const std::vector<std::vector<double>>& sims, double tau) {
  if (sims.empty()) throw std::invalid_argument("info_nce_value: empty batch");
  if (tau <= 0.0) throw std::invalid_argument("info_nce_value: temperature must be positive");
  double loss = 0.0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i].size() != sims.size()) {
      throw std::invalid_argument("info_nce_value: similarity matrix is not square");
    }
    double max_logit = sims[i][0] / tau;
    for (double s : sims[i]) max_logit = std::max(max_logit, s / tau);
    double total = 0.0;
    for (double s : sims[i]) total += std::exp(s / tau - max_logit);
    loss += max_logit + std::log(total) - sims[i][i] / tau;
  }
  return loss;
}

Tensor composite_loss(const Tensor& l_bin, const Tensor& l_c1, const Tensor& l_c2,
                      const LossConfig& config) {
  if (config.alpha < 0.0 || config.beta < 0.0 || config.gamma < 0.0) {
    throw std::invalid_argument("composite_loss: weights must be non-negative");
  }
  return add(add(scale(l_bin, config.alpha), scale(l_c1, config.beta)),
             scale(l_c2, config.gamma));
}

void ConfusionMatrix::update(double probability, int label, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("confusion update: threshold must lie in (0, 1)");
  }
  if (label != 0 && label != 1) {
    throw std::invalid_argument("confusion update: label must be 0 or 1");
  }
  const bool positive = probability >= threshold;
  if (positive) {
    label == 1 ? ++tp : ++fp;
  } else {
    label == 1 ? ++fn : ++tn;
  }
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("compute_metrics: empty confusion matrix");
  Metrics m;
  m.acc = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.precision = cm.tp + cm.fp == 0
                    ? 0.0
                    : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  m.recall =
      cm.tp + cm.fn == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  // 2PR/(P+R) simplified to counts: exact in integer arithmetic up to the
  // final division, so e.g. tp=3,fp=1,fn=2 lands on 2/3 to the last bit.
  const std::size_t f1_den = 2 * cm.tp + cm.fp + cm.fn;
  m.f1 = f1_den == 0 ? 0.0 : 2.0 * static_cast<double>(cm.tp) / static_cast<double>(f1_den);
  return m;
}

std::string metrics_json(const Metrics& metrics, std::size_t n) {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer),
                "{\"acc\":%.4f,\"precision\":%.4f,\"recall\":%.4f,\"f1\":%.4f,\"n\":%zu}",
                metrics.acc, metrics.precision, metrics.recall, metrics.f1, n);
  return buffer;
}

}  // namespace textmatch
