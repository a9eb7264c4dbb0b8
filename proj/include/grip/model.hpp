#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grip/types.hpp"

namespace grip {

enum class Architecture { linear, mlp1 };

Architecture architecture_from_string(const std::string& s);
const char* to_string(Architecture a);

/// Weight tensors shared by parameters, gradients and optimizer velocity.
/// linear uses only W2 (C x D) and b2 (C); mlp1 adds W1 (H x D), b1 (H)
/// with a ReLU in between.
struct ParamTensors {
  Matrix W1;
  Vector b1;
  Matrix W2;
  Vector b2;

  bool all_finite() const;
  void set_zero();
};

struct ClassifierParams {
  Architecture arch = Architecture::linear;
  int input_dim = 0;
  int hidden_dim = 0;  // 0 for linear
  int num_classes = 0;
  ParamTensors t;
};

ParamTensors zeros_like(const ClassifierParams& params);

/// Seeded uniform init in [-a, a], a = sqrt(6 / (fan_in + fan_out));
/// biases start at zero.
ClassifierParams init_params(Architecture arch, int input_dim, int hidden_dim,
                             int num_classes, std::uint64_t seed);

struct PredictionBatch {
  std::vector<int> sample_ids;
  Matrix logits;  // B x C
  Matrix probs;   // B x C, row-stochastic
};

/// Numerically stable row softmax (subtracts the row max).
Matrix softmax_rows(const Matrix& logits);

PredictionBatch forward(const ClassifierParams& params, const Matrix& features);
PredictionBatch forward(const ClassifierParams& params, const Matrix& features,
                        std::vector<int> sample_ids);

/// Exact analytic gradients of the network composition. dl_dlogits is the
/// upstream gradient (one row per batch row, already carrying any 1/B
/// factor from the loss); rows are contracted by summation so the result
/// is the gradient of the same scalar the loss reported.
ParamTensors backward(const ClassifierParams& params, const Matrix& features,
                      const Matrix& dl_dlogits);

struct OptimizerState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  ParamTensors velocity;
};

OptimizerState make_optimizer(const ClassifierParams& params, double learning_rate,
                              double momentum, double weight_decay);

/// velocity <- momentum * velocity + grads + weight_decay * params;
/// params <- params - lr * velocity. Throws on non-finite gradients.
void sgd_step(ClassifierParams& params, const ParamTensors& grads, OptimizerState& state);

/// JSON parameter checkpoint: version, architecture tag, shapes and
/// row-major weight arrays.
void save_params_json(const ClassifierParams& params, const std::filesystem::path& path);
ClassifierParams load_params_json(const std::filesystem::path& path);

}  // namespace grip
