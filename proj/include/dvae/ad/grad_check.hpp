#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dvae/ad/parameter.hpp"
#include "dvae/ad/tape.hpp"

namespace dvae::ad {

/// Builds a scalar loss on the given tape from the store it is bound to.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool non_finite = false;
  bool passed = false;
};

/// Denominator floor of the relative error, |a-n| / max(|a|, |n|, floor).
/// Coordinates whose true gradient is ~0 are then judged on absolute error.
inline constexpr double kGradCheckFloor = 1e-4;

/// Compares backward() against central differences for every scalar in
/// `store`. The store is perturbed in place and restored.
GradCheckReport grad_check(const LossBuilder& f, ParameterStore& store, double step = 1e-5, double tolerance = 1e-4);

}  // namespace dvae::ad
