#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace textmatch {

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  bool passed = false;
};

inline constexpr double kGradCheckTolerance = 1e-4;

/// Central finite differences (h = 1e-5) against tape gradients, one case
/// per differentiable op plus composed cases up to the full batch loss.
/// Inputs are sampled away from relu/abs kinks so the difference quotient
/// is valid. A case passes when its worst per-coordinate relative error
/// stays below kGradCheckTolerance.
std::vector<GradCheckReport> run_gradient_checks(std::uint64_t seed = 2026);

bool all_passed(const std::vector<GradCheckReport>& reports);

}  // namespace textmatch
