#pragma once

#include <span>
#include <vector>

#include "textmatch/tensor.hpp"

namespace textmatch {

/// Matrix product of two rank-2 tensors with matching inner dimension.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise max(0, x); the subgradient at 0 is 0.
Tensor relu(const Tensor& x);

/// Elementwise logistic sigmoid, branch form, no overflow for any finite x.
Tensor sigmoid(const Tensor& x);

/// Elementwise sum / difference of same-shape tensors.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);

/// Multiply every element by a constant.
Tensor scale(const Tensor& x, double factor);

/// Sum of all elements, as a 1x1 tensor.
Tensor sum(const Tensor& x);

/// Elementwise |a - b|; the subgradient where a == b is 0.
Tensor abs_diff(const Tensor& a, const Tensor& b);

/// Rank-2 concatenation along axis 0 (rows) or 1 (columns). A single part
/// is returned unchanged.
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);

/// Cosine similarity of two same-shape tensors viewed as flat vectors.
/// Throws std::domain_error when either norm is below 1e-12.
Tensor cosine_sim(const Tensor& a, const Tensor& b);

/// log(sum(exp(x))) over all elements, computed with max subtraction.
Tensor logsumexp(const Tensor& x);

/// Mean of embedding-table rows selected by `ids`, skipping `pad_id`.
/// `table` is rank-2 (vocab x dim); the result is 1 x dim.
Tensor embed_mean(const Tensor& table, std::span<const int> ids, int pad_id);

/// Summed binary cross-entropy -sum(y*log p + (1-y)*log(1-p)) over a 1xB row
/// of probabilities. Logs are floored at -100 so saturated probabilities
/// cannot produce an infinite loss.
Tensor bce_sum(const Tensor& probs, std::span<const double> labels);

/// Smallest vector norm cosine_sim accepts.
inline constexpr double kDegenerateNorm = 1e-12;

}  // namespace textmatch
