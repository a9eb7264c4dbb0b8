#include "grip/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace grip {
namespace {

void check_probs(const Matrix& probs) {
  if (probs.rows() == 0) throw std::invalid_argument("loss: empty batch");
}

}  // namespace

LossResult ce_loss(const Matrix& probs, const std::vector<int>& labels) {
  check_probs(probs);
  const int b = static_cast<int>(probs.rows());
  const int c = static_cast<int>(probs.cols());
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("ce_loss: one label per row required");

  LossResult r;
  r.dlogits = probs / b;
  double sum = 0.0;
  for (int i = 0; i < b; ++i) {
    if (labels[i] < 0 || labels[i] >= c)
      throw std::invalid_argument("ce_loss: label out of range");
    sum -= std::log(clamp_prob(probs(i, labels[i])));
    r.dlogits(i, labels[i]) -= 1.0 / b;
  }
  r.value = sum / b;
  return r;
}

LossResult soft_loss(const Matrix& probs, const Matrix& soft_targets) {
  check_probs(probs);
  if (soft_targets.rows() != probs.rows() || soft_targets.cols() != probs.cols())
    throw std::invalid_argument("soft_loss: target shape mismatch");

  const int b = static_cast<int>(probs.rows());
  LossResult r;
  double sum = 0.0;
  for (int i = 0; i < b; ++i)
    for (int c = 0; c < probs.cols(); ++c)
      sum -= soft_targets(i, c) * std::log(clamp_prob(probs(i, c)));
  r.value = sum / b;
  r.dlogits = (probs - soft_targets) / b;
  return r;
}

LossResult me_loss(const Matrix& probs) {
  check_probs(probs);
  const int b = static_cast<int>(probs.rows());
  const int c = static_cast<int>(probs.cols());

  LossResult r;
  r.dlogits.resize(b, c);
  double sum = 0.0;
  for (int i = 0; i < b; ++i) {
    double row = 0.0;  // sum_c p log p for this sample
    for (int k = 0; k < c; ++k) row += probs(i, k) * std::log(clamp_prob(probs(i, k)));
    sum += row;
    for (int k = 0; k < c; ++k)
      r.dlogits(i, k) = probs(i, k) * (std::log(clamp_prob(probs(i, k))) - row) / b;
  }
  r.value = sum / b;
  return r;
}

GrResult gr_loss(const Matrix& probs, const std::vector<int>& labels,
                 const Matrix& soft_targets, const LossWeights& weights) {
  if (weights.w < 0.0 || weights.w > 1.0)
    throw std::invalid_argument("gr_loss: w must be in [0, 1]");
  if (weights.gamma < 0.0) throw std::invalid_argument("gr_loss: gamma must be >= 0");

  const LossResult ce = ce_loss(probs, labels);
  const LossResult soft = soft_loss(probs, soft_targets);
  const LossResult me = me_loss(probs);

  GrResult r;
  r.parts.ce = ce.value;
  r.parts.soft = soft.value;
  r.parts.me = me.value;
  r.parts.total =
      (1.0 - weights.w) * ce.value + weights.w * soft.value + weights.gamma * me.value;
  r.dlogits = (1.0 - weights.w) * ce.dlogits + weights.w * soft.dlogits +
              weights.gamma * me.dlogits;
  return r;
}

}  // namespace grip
