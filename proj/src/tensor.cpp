#include "textmatch/tensor.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace textmatch {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

std::shared_ptr<detail::TensorNode> make_node(std::vector<std::size_t> shape,
                                              std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("tensor data length does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  return node;
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  std::size_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values) {
  return Tensor(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double value) { return from_values({1, 1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  std::size_t n = values.size();
  return from_values({1, n}, std::move(values));
}

std::size_t Tensor::rows() const {
  const auto& s = node_->shape;
  if (s.size() != 2) throw std::invalid_argument("rows() requires a rank-2 tensor, got " + shape_string(s));
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  if (s.size() != 2) throw std::invalid_argument("cols() requires a rank-2 tensor, got " + shape_string(s));
  return s[1];
}

double Tensor::value() const {
  if (numel() != 1) {
    throw std::invalid_argument("value() requires a scalar tensor, got " + shape_string(node_->shape));
  }
  return node_->values[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->values[r * cols() + c];
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

void Tensor::drop_grad() {
  if (node_) node_->grad.clear();
}

Tensor& Tensor::set_requires_grad(bool value) {
  node_->requires_grad = value;
  return *this;
}

namespace {
std::atomic<std::uint64_t> g_next_tape_id{1};
}

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)) {}

void Tape::record(std::vector<std::shared_ptr<detail::TensorNode>> inputs,
                  std::shared_ptr<detail::TensorNode> output, std::function<void()> pullback) {
  output->tape_id = id_;
  output->producer = static_cast<std::int64_t>(entries_.size());
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(pullback)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss");
  }
  detail::TensorNode* loss_node = loss.node();

  // A loss that is itself a requires_grad leaf gets d(loss)/d(loss) = 1.
  if (loss_node->tape_id != id_ || loss_node->producer < 0) {
    if (loss_node->requires_grad) {
      loss_node->grad.assign(1, 1.0);
    }
    return;  // constant loss: nothing reachable, no grads written
  }

  // Mark the entries this loss transitively depends on.
  std::vector<char> marked(entries_.size(), 0);
  std::vector<std::int64_t> stack{loss_node->producer};
  while (!stack.empty()) {
    std::int64_t idx = stack.back();
    stack.pop_back();
    if (marked[static_cast<std::size_t>(idx)]) continue;
    marked[static_cast<std::size_t>(idx)] = 1;
    for (const auto& in : entries_[static_cast<std::size_t>(idx)].inputs) {
      if (in->tape_id == id_ && in->producer >= 0 && !marked[static_cast<std::size_t>(in->producer)]) {
        stack.push_back(in->producer);
      }
    }
  }

  // Size and zero the adjoint buffers before the reverse sweep. Leaf grads
  // restart on every backward; intermediates are covered as entry outputs.
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!marked[i]) continue;
    entries_[i].output->grad.assign(entries_[i].output->numel(), 0.0);
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!marked[i]) continue;
    for (const auto& in : entries_[i].inputs) {
      if (in->requires_grad && (in->tape_id != id_ || in->producer < 0)) {
        in->grad.assign(in->numel(), 0.0);
      }
    }
  }

  loss_node->grad.assign(1, 1.0);
  for (std::size_t i = entries_.size(); i-- > 0;) {
    if (marked[i]) entries_[i].pullback();
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

}  // namespace textmatch
