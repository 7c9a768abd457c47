#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "textmatch/tensor.hpp"

namespace textmatch {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// AdamW with decoupled weight decay:
///   m = b1*m + (1-b1)*g          v = b2*v + (1-b2)*g^2
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
/// Parameter groups carry their own learning rate but share the global step
/// count used for bias correction. step() consumes and clears gradients; a
/// parameter without a gradient at step() time is a caller bug and throws.
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {});

  void add_group(std::vector<Tensor> params, double lr);

  void step();

  std::uint64_t step_count() const { return step_count_; }
  const AdamWOptions& options() const { return options_; }

  /// Binary snapshot of step count and per-parameter moment buffers.
  /// load() requires the same group/parameter structure it was saved with.
  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 private:
  struct Slot {
    Tensor param;
    std::vector<double> m;
    std::vector<double> v;
  };
  struct Group {
    std::vector<Slot> slots;
    double lr;
  };

  AdamWOptions options_;
  std::vector<Group> groups_;
  std::uint64_t step_count_ = 0;
};

}  // namespace textmatch
