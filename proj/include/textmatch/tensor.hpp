#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace textmatch {

class Tape;

namespace detail {

struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized lazily by backward()
  bool requires_grad = false;
  std::uint64_t tape_id = 0;   // tape that recorded the producing op, 0 = leaf
  std::int64_t producer = -1;  // entry index on that tape

  std::size_t numel() const { return values.size(); }
};

}  // namespace detail

/// Dense row-major tensor of 64-bit floats. Copies share the underlying
/// storage; arithmetic ops allocate a fresh result and, while a Tape is
/// active, record a pullback so backward() can fill gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);  // shape {1, n}

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->values.size(); }
  bool is_scalar() const { return numel() == 1; }
  std::size_t rows() const;
  std::size_t cols() const;

  double value() const;  // scalar extract, throws unless numel() == 1
  double at(std::size_t r, std::size_t c) const;

  std::span<const double> values() const { return node_->values; }
  std::span<double> mutable_values() { return node_->values; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();
  void drop_grad();

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  /// Identity of the underlying storage, used for parameter-sharing checks.
  const void* id() const { return node_.get(); }

  detail::TensorNode* node() const { return node_.get(); }
  std::shared_ptr<detail::TensorNode> shared_node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TensorNode> node) { return Tensor(std::move(node)); }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

/// Ordered record of executed ops. Entries are appended in execution order,
/// which is a topological order of the data flow; backward() walks the
/// ancestors of a scalar loss in reverse, visiting each entry exactly once.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return entries_.size(); }

  void record(std::vector<std::shared_ptr<detail::TensorNode>> inputs,
              std::shared_ptr<detail::TensorNode> output, std::function<void()> pullback);

  /// Populates grad on every requires_grad tensor reachable from `loss`.
  /// Gradients from multiple uses of a tensor accumulate additively.
  void backward(const Tensor& loss);

 private:
  struct Entry {
    std::vector<std::shared_ptr<detail::TensorNode>> inputs;
    std::shared_ptr<detail::TensorNode> output;
    std::function<void()> pullback;
  };

  std::uint64_t id_;
  std::vector<Entry> entries_;
};

/// RAII activation of a tape; ops record to the innermost active scope.
/// With no scope active, ops compute values only (inference mode).
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace textmatch
