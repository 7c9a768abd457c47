#include "textmatch/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace textmatch {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

/// Wraps the result of a forward computation and, when recording, registers
/// the pullback built by `make_pullback(output_node)`.
template <typename MakePullback>
Tensor make_op(std::vector<std::size_t> shape, std::vector<double> values,
               std::vector<NodePtr> inputs, MakePullback&& make_pullback) {
  Tensor out = Tensor::from_values(std::move(shape), std::move(values));
  Tape* tape = active_tape();
  const bool needs_grad =
      tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                     [](const NodePtr& n) { return n->requires_grad; });
  if (needs_grad) {
    out.set_requires_grad(true);
    NodePtr out_node = out.shared_node();
    tape->record(std::move(inputs), out_node, make_pullback(out_node));
  }
  return out;
}

void accumulate(const NodePtr& node, std::size_t index, double value) {
  if (!node->grad.empty()) node->grad[index] += value;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) {
        out[i * n + j] += aip * bv[p * n + j];
      }
    }
  }
  NodePtr na = a.shared_node(), nb = b.shared_node();
  return make_op({m, n}, std::move(out), {na, nb}, [na, nb, m, k, n](NodePtr no) {
    return [na, nb, no, m, k, n]() {
      // dA += G * B^T, dB += A^T * G
      if (!na->grad.empty()) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              acc += no->grad[i * n + j] * nb->values[p * n + j];
            }
            na->grad[i * k + p] += acc;
          }
        }
      }
      if (!nb->grad.empty()) {
        for (std::size_t p = 0; p < k; ++p) {
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
              acc += na->values[i * k + p] * no->grad[i * n + j];
            }
            nb->grad[p * n + j] += acc;
          }
        }
      }
    };
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  NodePtr nx = x.shared_node();
  return make_op(x.shape(), std::move(out), {nx}, [nx](NodePtr no) {
    return [nx, no]() {
      for (std::size_t i = 0; i < no->grad.size(); ++i) {
        if (nx->values[i] > 0.0) accumulate(nx, i, no->grad[i]);
      }
    };
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  NodePtr nx = x.shared_node();
  return make_op(x.shape(), std::move(out), {nx}, [nx](NodePtr no) {
    return [nx, no]() {
      for (std::size_t i = 0; i < no->grad.size(); ++i) {
        const double y = no->values[i];
        accumulate(nx, i, no->grad[i] * y * (1.0 - y));
      }
    };
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  NodePtr na = a.shared_node(), nb = b.shared_node();
  return make_op(a.shape(), std::move(out), {na, nb}, [na, nb](NodePtr no) {
    return [na, nb, no]() {
      for (std::size_t i = 0; i < no->grad.size(); ++i) {
        accumulate(na, i, no->grad[i]);
        accumulate(nb, i, no->grad[i]);
      }
    };
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  NodePtr na = a.shared_node(), nb = b.shared_node();
  return make_op(a.shape(), std::move(out), {na, nb}, [na, nb](NodePtr no) {
    return [na, nb, no]() {
      for (std::size_t i = 0; i < no->grad.size(); ++i) {
        accumulate(na, i, no->grad[i]);
        accumulate(nb, i, -no->grad[i]);
      }
    };
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  NodePtr nx = x.shared_node();
  return make_op(x.shape(), std::move(out), {nx}, [nx, factor](NodePtr no) {
    return [nx, no, factor]() {
      for (std::size_t i = 0; i < no->grad.size(); ++i) {
        accumulate(nx, i, no->grad[i] * factor);
      }
    };
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  NodePtr nx = x.shared_node();
  return make_op({1, 1}, {total}, {nx}, [nx](NodePtr no) {
    return [nx, no]() {
      const double g = no->grad[0];
      for (std::size_t i = 0; i < nx->numel(); ++i) accumulate(nx, i, g);
    };
  });
}

Tensor abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "abs_diff");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(av[i] - bv[i]);
  NodePtr na = a.shared_node(), nb = b.shared_node();
  return make_op(a.shape(), std::move(out), {na, nb}, [na, nb](NodePtr no) {
    return [na, nb, no]() {
      for (std::size_t i = 0; i < no->grad.size(); ++i) {
        const double d = na->values[i] - nb->values[i];
        const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        accumulate(na, i, no->grad[i] * s);
        accumulate(nb, i, -no->grad[i] * s);
      }
    };
  });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  if (parts.size() == 1) return parts[0];

  const std::size_t side = axis == 0 ? parts[0].cols() : parts[0].rows();
  std::size_t along = 0;
  for (const Tensor& p : parts) {
    const std::size_t p_side = axis == 0 ? p.cols() : p.rows();
    if (p_side != side) {
      throw std::invalid_argument("concat: side dimension mismatch " +
                                  shape_string(parts[0].shape()) + " vs " +
                                  shape_string(p.shape()));
    }
    along += axis == 0 ? p.rows() : p.cols();
  }

  const std::size_t out_rows = axis == 0 ? along : side;
  const std::size_t out_cols = axis == 0 ? side : along;
  std::vector<double> out(out_rows * out_cols);
  std::vector<std::size_t> offsets(parts.size());  // row or column offset per part
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = offset;
    auto pv = parts[p].values();
    const std::size_t pr = parts[p].rows(), pc = parts[p].cols();
    for (std::size_t r = 0; r < pr; ++r) {
      for (std::size_t c = 0; c < pc; ++c) {
        if (axis == 0) {
          out[(offset + r) * out_cols + c] = pv[r * pc + c];
        } else {
          out[r * out_cols + (offset + c)] = pv[r * pc + c];
        }
      }
    }
    offset += axis == 0 ? pr : pc;
  }

  std::vector<NodePtr> inputs;
  inputs.reserve(parts.size());
  for (const Tensor& p : parts) inputs.push_back(p.shared_node());
  return make_op({out_rows, out_cols}, std::move(out), inputs,
                 [inputs, offsets, axis, out_cols](NodePtr no) {
                   return [inputs, offsets, axis, out_cols, no]() {
                     for (std::size_t p = 0; p < inputs.size(); ++p) {
                       const NodePtr& part = inputs[p];
                       if (part->grad.empty()) continue;
                       const std::size_t pr = part->shape[0], pc = part->shape[1];
                       const std::size_t offset = offsets[p];
                       for (std::size_t r = 0; r < pr; ++r) {
                         for (std::size_t c = 0; c < pc; ++c) {
                           const std::size_t src = axis == 0
                                                       ? (offset + r) * out_cols + c
                                                       : r * out_cols + (offset + c);
                           part->grad[r * pc + c] += no->grad[src];
                         }
                       }
                     }
                   };
                 });
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  std::vector<Tensor> v(parts);
  return concat(std::span<const Tensor>(v), axis);
}

Tensor cosine_sim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine_sim");
  auto av = a.values(), bv = b.values();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na2 += av[i] * av[i];
    nb2 += bv[i] * bv[i];
  }
  const double norm_a = std::sqrt(na2), norm_b = std::sqrt(nb2);
  if (norm_a < kDegenerateNorm || norm_b < kDegenerateNorm) {
    throw std::domain_error("cosine_sim: degenerate vector (norm below 1e-12)");
  }
  const double sim = dot / (norm_a * norm_b);
  NodePtr pa = a.shared_node(), pb = b.shared_node();
  return make_op({1, 1}, {sim}, {pa, pb}, [pa, pb, norm_a, norm_b, sim](NodePtr no) {
    return [pa, pb, no, norm_a, norm_b, sim]() {
      const double g = no->grad[0];
      const double inv_ab = 1.0 / (norm_a * norm_b);
      const double inv_a2 = 1.0 / (norm_a * norm_a);
      const double inv_b2 = 1.0 / (norm_b * norm_b);
      for (std::size_t i = 0; i < pa->numel(); ++i) {
        accumulate(pa, i, g * (pb->values[i] * inv_ab - sim * pa->values[i] * inv_a2));
        accumulate(pb, i, g * (pa->values[i] * inv_ab - sim * pb->values[i] * inv_b2));
      }
    };
  });
}

Tensor logsumexp(const Tensor& x) {
  auto xv = x.values();
  double max_val = xv[0];
  for (double v : xv) max_val = std::max(max_val, v);
  double total = 0.0;
  for (double v : xv) total += std::exp(v - max_val);
  const double lse = max_val + std::log(total);
  NodePtr nx = x.shared_node();
  return make_op({1, 1}, {lse}, {nx}, [nx, max_val, total](NodePtr no) {
    return [nx, no, max_val, total]() {
      const double g = no->grad[0];
      for (std::size_t i = 0; i < nx->numel(); ++i) {
        accumulate(nx, i, g * std::exp(nx->values[i] - max_val) / total);
      }
    };
  });
}

Tensor embed_mean(const Tensor& table, std::span<const int> ids, int pad_id) {
  if (table.shape().size() != 2) {
    throw std::invalid_argument("embed_mean: table must be rank-2, got " +
                                shape_string(table.shape()));
  }
  const std::size_t vocab = table.rows(), dim = table.cols();
  std::vector<int> used;
  used.reserve(ids.size());
  for (int id : ids) {
    if (id == pad_id) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::invalid_argument("embed_mean: id " + std::to_string(id) +
                                  " out of range for table " + shape_string(table.shape()));
    }
    used.push_back(id);
  }
  if (used.empty()) throw std::invalid_argument("embed_mean: no non-pad ids");

  std::vector<double> out(dim, 0.0);
  auto tv = table.values();
  for (int id : used) {
    for (std::size_t j = 0; j < dim; ++j) out[j] += tv[static_cast<std::size_t>(id) * dim + j];
  }
  const double inv = 1.0 / static_cast<double>(used.size());
  for (double& v : out) v *= inv;

  NodePtr nt = table.shared_node();
  return make_op({1, dim}, std::move(out), {nt}, [nt, used, dim, inv](NodePtr no) {
    return [nt, no, used, dim, inv]() {
      for (int id : used) {
        for (std::size_t j = 0; j < dim; ++j) {
          accumulate(nt, static_cast<std::size_t>(id) * dim + j, no->grad[j] * inv);
        }
      }
    };
  });
}

Tensor bce_sum(const Tensor& probs, std::span<const double> labels) {
  if (probs.numel() != labels.size()) {
    throw std::invalid_argument("bce_sum: " + std::to_string(probs.numel()) +
                                " probabilities vs " + std::to_string(labels.size()) + " labels");
  }
  constexpr double kLogFloor = -100.0;
  auto pv = probs.values();
  double loss = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double log_p = std::max(std::log(pv[i]), kLogFloor);
    const double log_q = std::max(std::log(1.0 - pv[i]), kLogFloor);
    loss -= labels[i] * log_p + (1.0 - labels[i]) * log_q;
  }
  NodePtr np = probs.shared_node();
  std::vector<double> y(labels.begin(), labels.end());
  return make_op({1, 1}, {loss}, {np}, [np, y = std::move(y)](NodePtr no) {
    return [np, no, y]() {
      constexpr double kEps = 1e-12;
      const double g = no->grad[0];
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = np->values[i];
        const double d = -y[i] / std::max(p, kEps) + (1.0 - y[i]) / std::max(1.0 - p, kEps);
        accumulate(np, i, g * d);
      }
    };
  });
}

}  // namespace textmatch
