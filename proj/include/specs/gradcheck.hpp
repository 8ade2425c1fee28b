#pragma once

#include <span>

#include "specs/trainer.hpp"

namespace specs {

struct GradCheckResult {
  double max_rel_error = 0.0;  // max |analytic - numeric| / max(1, |numeric|)
  std::size_t checked = 0;     // parameters compared by finite differences
  std::size_t flagged = 0;     // excluded: a hinge kink lies within +-h
  std::size_t untouched = 0;   // token rows the batch never reads; analytic must be 0
};

/// Central differences (step h) of the batch objective against the analytic
/// gradient, over every parameter. Margins stay frozen at their value at the
/// unperturbed parameters, as they are detached in training.
GradCheckResult gradient_check(const ToyDualEncoder& model, std::span<const TrainingExample> batch,
                               const LossWeights& weights, const TrainConfig& cfg, double h = 1e-5);

}  // namespace specs
