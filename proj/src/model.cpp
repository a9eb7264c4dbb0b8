#include "grip/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace grip {
namespace {

using json = nlohmann::ordered_json;

constexpr int kParamsFormatVersion = 1;

void check_features(const ClassifierParams& params, const Matrix& features) {
  if (features.cols() != params.input_dim)
    throw std::invalid_argument("forward: feature dim mismatch");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols) {
  Matrix m(rows, cols);
  if (static_cast<int>(j.size()) != rows)
    throw std::runtime_error("params file: bad row count");
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw std::runtime_error("params file: bad column count");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

Architecture architecture_from_string(const std::string& s) {
  if (s == "linear") return Architecture::linear;
  if (s == "mlp1") return Architecture::mlp1;
  throw std::invalid_argument("unknown architecture: " + s);
}

const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::linear: return "linear";
    case Architecture::mlp1: return "mlp1";
  }
  return "?";
}

bool ParamTensors::all_finite() const {
  return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite();
}

void ParamTensors::set_zero() {
  W1.setZero();
  b1.setZero();
  W2.setZero();
  b2.setZero();
}

ParamTensors zeros_like(const ClassifierParams& params) {
  ParamTensors z;
  z.W1 = Matrix::Zero(params.t.W1.rows(), params.t.W1.cols());
  z.b1 = Vector::Zero(params.t.b1.size());
  z.W2 = Matrix::Zero(params.t.W2.rows(), params.t.W2.cols());
  z.b2 = Vector::Zero(params.t.b2.size());
  return z;
}

ClassifierParams init_params(Architecture arch, int input_dim, int hidden_dim,
                             int num_classes, std::uint64_t seed) {
  if (input_dim < 1 || num_classes < 2)
    throw std::invalid_argument("init_params: bad dimensions");
  if (arch == Architecture::mlp1 && hidden_dim < 1)
    throw std::invalid_argument("init_params: mlp1 needs hidden_dim >= 1");

  ClassifierParams p;
  p.arch = arch;
  p.input_dim = input_dim;
  p.hidden_dim = arch == Architecture::mlp1 ? hidden_dim : 0;
  p.num_classes = num_classes;

  std::mt19937_64 rng(seed);
  auto fill_uniform = [&rng](Matrix& m, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  };

  if (arch == Architecture::mlp1) {
    p.t.W1.resize(hidden_dim, input_dim);
    p.t.b1 = Vector::Zero(hidden_dim);
    p.t.W2.resize(num_classes, hidden_dim);
    p.t.b2 = Vector::Zero(num_classes);
    fill_uniform(p.t.W1, input_dim, hidden_dim);
    fill_uniform(p.t.W2, hidden_dim, num_classes);
  } else {
    p.t.W1.resize(0, 0);
    p.t.b1.resize(0);
    p.t.W2.resize(num_classes, input_dim);
    p.t.b2 = Vector::Zero(num_classes);
    fill_uniform(p.t.W2, input_dim, num_classes);
  }
  return p;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix shifted = logits.colwise() - logits.rowwise().maxCoeff();
  Matrix e = shifted.array().exp();
  return e.array().colwise() / e.rowwise().sum().array();
}

PredictionBatch forward(const ClassifierParams& params, const Matrix& features) {
  std::vector<int> ids(features.rows());
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) ids[i] = i;
  return forward(params, features, std::move(ids));
}

PredictionBatch forward(const ClassifierParams& params, const Matrix& features,
                        std::vector<int> sample_ids) {
  check_features(params, features);
  if (static_cast<int>(sample_ids.size()) != features.rows())
    throw std::invalid_argument("forward: one sample id per row required");

  PredictionBatch out;
  out.sample_ids = std::move(sample_ids);
  if (params.arch == Architecture::mlp1) {
    Matrix z1 = (features * params.t.W1.transpose()).rowwise() + params.t.b1.transpose();
    Matrix a1 = z1.cwiseMax(0.0);
    out.logits = (a1 * params.t.W2.transpose()).rowwise() + params.t.b2.transpose();
  } else {
    out.logits =
        (features * params.t.W2.transpose()).rowwise() + params.t.b2.transpose();
  }
  out.probs = softmax_rows(out.logits);
  return out;
}

ParamTensors backward(const ClassifierParams& params, const Matrix& features,
                      const Matrix& dl_dlogits) {
  check_features(params, features);
  if (dl_dlogits.rows() != features.rows() || dl_dlogits.cols() != params.num_classes)
    throw std::invalid_argument("backward: upstream gradient shape mismatch");

  ParamTensors g = zeros_like(params);
  if (params.arch == Architecture::mlp1) {
    Matrix z1 = (features * params.t.W1.transpose()).rowwise() + params.t.b1.transpose();
    Matrix a1 = z1.cwiseMax(0.0);
    g.W2 = dl_dlogits.transpose() * a1;
    g.b2 = dl_dlogits.colwise().sum().transpose();
    Matrix da1 = dl_dlogits * params.t.W2;
    Matrix dz1 = (z1.array() > 0.0).select(da1, Matrix::Zero(da1.rows(), da1.cols()));
    g.W1 = dz1.transpose() * features;
    g.b1 = dz1.colwise().sum().transpose();
  } else {
    g.W2 = dl_dlogits.transpose() * features;
    g.b2 = dl_dlogits.colwise().sum().transpose();
  }
  return g;
}

OptimizerState make_optimizer(const ClassifierParams& params, double learning_rate,
                              double momentum, double weight_decay) {
  OptimizerState s;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.velocity = zeros_like(params);
  return s;
}

void sgd_step(ClassifierParams& params, const ParamTensors& grads, OptimizerState& state) {
  if (!grads.all_finite()) throw std::runtime_error("sgd_step: non-finite gradient");
  auto update = [&state](auto& p, auto& v, const auto& g) {
    v = state.momentum * v + g + state.weight_decay * p;
    p -= state.learning_rate * v;
  };
  update(params.t.W1, state.velocity.W1, grads.W1);
  update(params.t.b1, state.velocity.b1, grads.b1);
  update(params.t.W2, state.velocity.W2, grads.W2);
  update(params.t.b2, state.velocity.b2, grads.b2);
}

void save_params_json(const ClassifierParams& params, const std::filesystem::path& path) {
  json j;
  j["format_version"] = kParamsFormatVersion;
  j["arch"] = to_string(params.arch);
  j["input_dim"] = params.input_dim;
  j["hidden_dim"] = params.hidden_dim;
  j["num_classes"] = params.num_classes;
  j["W1"] = matrix_to_json(params.t.W1);
  j["b1"] = matrix_to_json(params.t.b1);
  j["W2"] = matrix_to_json(params.t.W2);
  j["b2"] = matrix_to_json(params.t.b2);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write params: " + path.string());
  out << j.dump(2) << "\n";
}

ClassifierParams load_params_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params: " + path.string());
  json j = json::parse(in);
  if (j.at("format_version").get<int>() != kParamsFormatVersion)
    throw std::runtime_error("params file: unsupported format version");

  ClassifierParams p;
  p.arch = architecture_from_string(j.at("arch").get<std::string>());
  p.input_dim = j.at("input_dim").get<int>();
  p.hidden_dim = j.at("hidden_dim").get<int>();
  p.num_classes = j.at("num_classes").get<int>();
  const int h = p.hidden_dim;
  if (p.arch == Architecture::mlp1) {
    p.t.W1 = matrix_from_json(j.at("W1"), h, p.input_dim);
    p.t.b1 = matrix_from_json(j.at("b1"), h, 1);
    p.t.W2 = matrix_from_json(j.at("W2"), p.num_classes, h);
  } else {
    p.t.W1.resize(0, 0);
    p.t.b1.resize(0);
    p.t.W2 = matrix_from_json(j.at("W2"), p.num_classes, p.input_dim);
  }
  p.t.b2 = matrix_from_json(j.at("b2"), p.num_classes, 1);
  return p;
}

}  // namespace grip
