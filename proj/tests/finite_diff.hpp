#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "grip/model.hpp"

namespace grip_test {

// Central-difference gradient of an arbitrary scalar function of the
// parameters. Independent of backward(); used as the gradient oracle.
template <typename ScalarFn>
grip::ParamTensors finite_diff_grads(const grip::ClassifierParams& params,
                                     ScalarFn f, double h = 1e-4) {
  grip::ClassifierParams work = params;
  grip::ParamTensors grads = grip::zeros_like(params);

  auto sweep = [&](grip::Matrix& tensor, grip::Matrix& out) {
    for (int r = 0; r < tensor.rows(); ++r) {
      for (int c = 0; c < tensor.cols(); ++c) {
        const double keep = tensor(r, c);
        tensor(r, c) = keep + h;
        const double plus = f(work);
        tensor(r, c) = keep - h;
        const double minus = f(work);
        tensor(r, c) = keep;
        out(r, c) = (plus - minus) / (2.0 * h);
      }
    }
  };
  auto sweep_vec = [&](grip::Vector& tensor, grip::Vector& out) {
    for (int r = 0; r < tensor.size(); ++r) {
      const double keep = tensor(r);
      tensor(r) = keep + h;
      const double plus = f(work);
      tensor(r) = keep - h;
      const double minus = f(work);
      tensor(r) = keep;
      out(r) = (plus - minus) / (2.0 * h);
    }
  };

  sweep(work.t.W1, grads.W1);
  sweep_vec(work.t.b1, grads.b1);
  sweep(work.t.W2, grads.W2);
  sweep_vec(work.t.b2, grads.b2);
  return grads;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_rel_err(const grip::ParamTensors& a, const grip::ParamTensors& b) {
  double worst = 0.0;
  auto scan = [&worst](const grip::Matrix& x, const grip::Matrix& y) {
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < x.cols(); ++c) worst = std::max(worst, rel_err(x(r, c), y(r, c)));
  };
  scan(a.W1, b.W1);
  scan(a.W2, b.W2);
  for (int i = 0; i < a.b1.size(); ++i) worst = std::max(worst, rel_err(a.b1(i), b.b1(i)));
  for (int i = 0; i < a.b2.size(); ++i) worst = std::max(worst, rel_err(a.b2(i), b.b2(i)));
  return worst;
}

}  // namespace grip_test
