#pragma once

#include <vector>

#include "grip/types.hpp"

namespace grip {

struct LossWeights {
  double w = 0.5;      // in [0, 1]
  double gamma = 0.5;  // >= 0
};

struct LossResult {
  double value = 0.0;
  Matrix dlogits;  // B x C, gradient w.r.t. the logits that produced probs
};

/// Mean cross entropy -log p(y_i). Gradient (probs - onehot) / B.
LossResult ce_loss(const Matrix& probs, const std::vector<int>& labels);

/// Mean soft cross entropy -sum_c T_c log p_c against row-stochastic
/// targets. Gradient (probs - targets) / B.
LossResult soft_loss(const Matrix& probs, const Matrix& soft_targets);

/// Negative mean prediction entropy: mean of sum_c p log p. Minimizing it
/// pushes predictions toward uniform.
LossResult me_loss(const Matrix& probs);

struct GrBreakdown {
  double ce = 0.0;
  double soft = 0.0;
  double me = 0.0;
  double total = 0.0;
};

struct GrResult {
  GrBreakdown parts;
  Matrix dlogits;
};

/// Group-regularization loss (1-w)*ce + w*soft + gamma*me; the gradient is
/// the same linear combination of the component gradients.
GrResult gr_loss(const Matrix& probs, const std::vector<int>& labels,
                 const Matrix& soft_targets, const LossWeights& weights);

}  // namespace grip
