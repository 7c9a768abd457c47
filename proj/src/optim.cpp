#include "textmatch/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace textmatch {

AdamW::AdamW(AdamWOptions options) : options_(options) {
  if (options_.beta1 < 0.0 || options_.beta1 >= 1.0 || options_.beta2 < 0.0 ||
      options_.beta2 >= 1.0) {
    throw std::invalid_argument("adamw: betas must lie in [0, 1)");
  }
  if (options_.eps <= 0.0) throw std::invalid_argument("adamw: eps must be positive");
  if (options_.weight_decay < 0.0) {
    throw std::invalid_argument("adamw: weight decay must be non-negative");
  }
}

void AdamW::add_group(std::vector<Tensor> params, double lr) {
  if (lr <= 0.0) throw std::invalid_argument("adamw: learning rate must be positive");
  Group group;
  group.lr = lr;
  group.slots.reserve(params.size());
  for (Tensor& p : params) {
    if (!p.defined()) throw std::invalid_argument("adamw: undefined parameter tensor");
    Slot slot;
    slot.m.assign(p.numel(), 0.0);
    slot.v.assign(p.numel(), 0.0);
    slot.param = std::move(p);
    group.slots.push_back(std::move(slot));
  }
  groups_.push_back(std::move(group));
}

void AdamW::step() {
  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    Group& group = groups_[gi];
    for (std::size_t si = 0; si < group.slots.size(); ++si) {
      Slot& slot = group.slots[si];
      if (!slot.param.has_grad()) {
        throw std::logic_error("adamw: parameter " + std::to_string(si) + " in group " +
                               std::to_string(gi) +
                               " has no gradient; run backward() before step()");
      }
      auto grad = slot.param.grad();
      auto values = slot.param.mutable_values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i];
        slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g;
        slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g * g;
        const double m_hat = slot.m[i] / bias1;
        const double v_hat = slot.v[i] / bias2;
        values[i] -= group.lr * (m_hat / (std::sqrt(v_hat) + options_.eps) +
                                 options_.weight_decay * values[i]);
      }
      slot.param.drop_grad();
    }
  }
}

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("adamw: truncated optimizer state");
  return v;
}

}  // namespace

void AdamW::save_state(std::ostream& out) const {
  write_u64(out, step_count_);
  write_u64(out, groups_.size());
  for (const Group& group : groups_) {
    write_u64(out, group.slots.size());
    for (const Slot& slot : group.slots) {
      write_u64(out, slot.m.size());
      out.write(reinterpret_cast<const char*>(slot.m.data()),
                static_cast<std::streamsize>(slot.m.size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(slot.v.data()),
                static_cast<std::streamsize>(slot.v.size() * sizeof(double)));
    }
  }
}

void AdamW::load_state(std::istream& in) {
  const std::uint64_t step_count = read_u64(in);
  if (read_u64(in) != groups_.size()) {
    throw std::runtime_error("adamw: optimizer state has a different group count");
  }
  for (Group& group : groups_) {
    if (read_u64(in) != group.slots.size()) {
      throw std::runtime_error("adamw: optimizer state has a different parameter count");
    }
    for (Slot& slot : group.slots) {
      if (read_u64(in) != slot.m.size()) {
        throw std::runtime_error("adamw: optimizer state has a different parameter size");
      }
      in.read(reinterpret_cast<char*>(slot.m.data()),
              static_cast<std::streamsize>(slot.m.size() * sizeof(double)));
      in.read(reinterpret_cast<char*>(slot.v.data()),
              static_cast<std::streamsize>(slot.v.size() * sizeof(double)));
      if (!in) throw std::runtime_error("adamw: truncated optimizer state");
    }
  }
  step_count_ = step_count;
}

}  // namespace textmatch
