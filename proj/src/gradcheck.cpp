#include "specs/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace specs {

GradCheckResult gradient_check(const ToyDualEncoder& model, std::span<const TrainingExample> batch,
                               const LossWeights& weights, const TrainConfig& cfg, double h) {
  Gradients analytic;
  const BatchEvaluation base = evaluate_batch(model, batch, weights, cfg, &analytic);
  const std::pair<double, double> margins{base.loss.epsilon_pos, base.loss.epsilon_neg};

  GradCheckResult result;
  ToyDualEncoder probe = model;
  auto check = [&](double& param, double analytic_value) {
    const double saved = param;
    param = saved + h;
    const auto plus = evaluate_batch(probe, batch, weights, cfg, nullptr, margins);
    param = saved - h;
    const auto minus = evaluate_batch(probe, batch, weights, cfg, nullptr, margins);
    param = saved;
    if (!(plus.pattern == base.pattern) || !(minus.pattern == base.pattern)) {
      ++result.flagged;
      return;
    }
    const double numeric = (plus.loss.total - minus.loss.total) / (2.0 * h);
    const double err = std::abs(analytic_value - numeric) / std::max(1.0, std::abs(numeric));
    result.max_rel_error = std::max(result.max_rel_error, err);
    ++result.checked;
  };

  for (Eigen::Index i = 0; i < probe.image_proj.rows(); ++i) {
    for (Eigen::Index j = 0; j < probe.image_proj.cols(); ++j) check(probe.image_proj(i, j), analytic.image_proj(i, j));
  }

  std::set<std::size_t> rows;
  for (const auto& ex : batch) {
    for (const std::string* text : {&ex.caption, &ex.base, &ex.positive, &ex.negative}) {
      for (std::size_t id : model.token_ids(*text)) rows.insert(id);
    }
  }
  for (Eigen::Index i = 0; i < probe.token_table.rows(); ++i) {
    if (!rows.contains(static_cast<std::size_t>(i))) {
      // The objective does not read this row, so its true gradient is exactly 0.
      ++result.untouched;
      result.max_rel_error = std::max(result.max_rel_error, analytic.token_table.row(i).cwiseAbs().maxCoeff());
      continue;
    }
    for (Eigen::Index j = 0; j < probe.token_table.cols(); ++j) check(probe.token_table(i, j), analytic.token_table(i, j));
  }
  return result;
}

}  // namespace specs
