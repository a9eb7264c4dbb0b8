#pragma once

#include <Eigen/Dense>
#include <algorithm>

namespace grip {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ProbRow = Eigen::RowVectorXd;

/// Floor applied to every probability before it enters a logarithm.
/// All losses and divergences rely on this single constant.
inline constexpr double kProbFloor = 1e-12;

inline double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0); }

/// Per-sample outcome of an instance-purification epoch.
enum class Disposition { clean, relabeled, discarded };

inline const char* to_string(Disposition d) {
  switch (d) {
    case Disposition::clean: return "clean";
    case Disposition::relabeled: return "relabeled";
    case Disposition::discarded: return "discarded";
  }
  return "?";
}

}  // namespace grip
