#include "specs/losses.hpp"

#include <algorithm>
#include <cmath>

#include "specs/error.hpp"

namespace specs {
namespace {

// sign = +1 for the positive loss (extended should exceed base), -1 for the
// negative loss (extended should fall below base).
HingeResult hinge(std::span<const SimilarityPair> batch, double sign, const MarginMode& mode,
                  std::optional<double> frozen_epsilon) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "hinge loss over an empty batch");
  const auto n = static_cast<double>(batch.size());

  HingeResult r;
  if (frozen_epsilon) {
    r.epsilon = *frozen_epsilon;
  } else if (!mode.dynamic) {
    r.epsilon = mode.fixed_value;
  } else {
    double gap = 0.0;
    for (const auto& p : batch) gap += sign * (p.extended - p.base);
    r.epsilon = std::clamp(gap / n, kMarginFloor, kMarginCeiling);
  }

  r.d_base.resize(batch.size());
  r.d_extended.resize(batch.size());
  r.active.resize(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double arg = sign * (batch[k].base - batch[k].extended) + r.epsilon;
    const bool on = arg > 0.0;
    r.active[k] = on;
    if (on) r.loss += arg;
    r.d_base[k] = on ? sign / n : 0.0;
    r.d_extended[k] = on ? -sign / n : 0.0;
  }
  r.loss /= n;
  return r;
}

}  // namespace

HingeResult positive_hinge_loss(std::span<const SimilarityPair> batch, const MarginMode& mode,
                                std::optional<double> frozen_epsilon) {
  return hinge(batch, 1.0, mode, frozen_epsilon);
}

HingeResult negative_hinge_loss(std::span<const SimilarityPair> batch, const MarginMode& mode,
                                std::optional<double> frozen_epsilon) {
  return hinge(batch, -1.0, mode, frozen_epsilon);
}

ContrastiveResult contrastive_loss(const Eigen::MatrixXd& image, const Eigen::MatrixXd& text,
                                   double temperature) {
  const Eigen::Index b = image.rows();
  if (b < 2 || text.rows() != b) {
    throw Error(ErrorCode::BatchTooSmall, "contrastive loss needs at least two matched pairs");
  }
  if (image.cols() != text.cols()) throw Error(ErrorCode::DimMismatch, "encoding widths differ");

  const Eigen::MatrixXd logits = image * text.transpose() / temperature;

  // Row softmax (image -> text) and column softmax (text -> image), stabilised.
  Eigen::MatrixXd p_row(b, b), p_col(b, b);
  double loss_row = 0.0, loss_col = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double z = e.sum();
    p_row.row(i) = e / z;
    loss_row += -(logits(i, i) - mx - std::log(z));
  }
  for (Eigen::Index j = 0; j < b; ++j) {
    const double mx = logits.col(j).maxCoeff();
    const Eigen::VectorXd e = (logits.col(j).array() - mx).exp();
    const double z = e.sum();
    p_col.col(j) = e / z;
    loss_col += -(logits(j, j) - mx - std::log(z));
  }
  const double bd = static_cast<double>(b);

  ContrastiveResult r;
  r.loss = 0.5 * (loss_row + loss_col) / bd;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(b, b);
  const Eigen::MatrixXd d_logits = (0.5 / bd) * ((p_row - eye) + (p_col - eye));
  r.d_image = d_logits * text / temperature;
  r.d_text = d_logits.transpose() * image / temperature;
  return r;
}

}  // namespace specs
