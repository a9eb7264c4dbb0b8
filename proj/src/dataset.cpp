#include "grip/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace grip {
namespace {

using json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int sample_row(const Matrix& transition, int row, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  const int cols = static_cast<int>(transition.cols());
  for (int c = 0; c < cols; ++c) {
    cum += transition(row, c);
    if (u < cum) return c;
  }
  return cols - 1;  // guards against cumulative rounding short of 1
}

}  // namespace

bool Dataset::has_ground_truth() const {
  if (samples.empty()) return false;
  return std::all_of(samples.begin(), samples.end(),
                     [](const Sample& s) { return s.true_label >= 0; });
}

void Dataset::validate() const {
  if (num_classes < 2) throw std::invalid_argument("dataset: num_classes must be >= 2");
  if (feature_dim < 1) throw std::invalid_argument("dataset: feature_dim must be >= 1");
  std::unordered_set<int> ids;
  ids.reserve(samples.size());
  for (const Sample& s : samples) {
    if (!ids.insert(s.id).second)
      throw std::invalid_argument("dataset: duplicate sample id " + std::to_string(s.id));
    if (s.features.size() != feature_dim)
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) +
                                  " feature dim mismatch");
    if (s.given_label < 0 || s.given_label >= num_classes)
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) +
                                  " given_label out of range");
    if (s.true_label < -1 || s.true_label >= num_classes)
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) +
                                  " true_label out of range");
    if (s.origin == Origin::clean &&
        (s.true_label < 0 || s.true_label != s.given_label))
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) +
                                  " marked clean but labels disagree");
    if (s.origin == Origin::flipped &&
        (s.true_label < 0 || s.true_label == s.given_label))
      throw std::invalid_argument("dataset: sample " + std::to_string(s.id) +
                                  " marked flipped but labels agree");
  }
}

Dataset make_dataset(const Matrix& features, const std::vector<int>& given_labels,
                     int num_classes, const std::vector<int>& true_labels) {
  const int n = static_cast<int>(features.rows());
  if (static_cast<int>(given_labels.size()) != n)
    throw std::invalid_argument("make_dataset: one given label per row required");
  if (!true_labels.empty() && static_cast<int>(true_labels.size()) != n)
    throw std::invalid_argument("make_dataset: true_labels must be empty or match rows");
  Dataset d;
  d.num_classes = num_classes;
  d.feature_dim = static_cast<int>(features.cols());
  d.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    Sample& s = d.samples[i];
    s.id = i;
    s.features = features.row(i).transpose();
    s.given_label = given_labels[i];
    s.true_label = true_labels.empty() ? -1 : true_labels[i];
    if (s.true_label < 0)
      s.origin = Origin::unknown;
    else
      s.origin = (s.true_label == s.given_label) ? Origin::clean : Origin::flipped;
  }
  d.validate();
  return d;
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "symmetric") return NoiseKind::symmetric;
  if (s == "asymmetric") return NoiseKind::asymmetric;
  if (s == "explicit") return NoiseKind::explicit_matrix;
  throw std::invalid_argument("unknown noise kind: " + s);
}

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::asymmetric: return "asymmetric";
    case NoiseKind::explicit_matrix: return "explicit";
  }
  return "?";
}

Matrix make_transition_matrix(NoiseKind kind, double ratio, int num_classes) {
  if (num_classes < 2)
    throw std::invalid_argument("transition matrix needs num_classes >= 2");
  if (ratio < 0.0 || ratio >= 1.0)
    throw std::invalid_argument("noise ratio must be in [0, 1)");
  Matrix t = Matrix::Zero(num_classes, num_classes);
  switch (kind) {
    case NoiseKind::symmetric: {
      const double off = ratio / (num_classes - 1);
      t.setConstant(off);
      t.diagonal().setConstant(1.0 - ratio);
      break;
    }
    case NoiseKind::asymmetric: {
      t.diagonal().setConstant(1.0 - ratio);
      for (int c = 0; c < num_classes; ++c) t(c, (c + 1) % num_classes) = ratio;
      break;
    }
    case NoiseKind::explicit_matrix:
      throw std::invalid_argument("explicit noise takes a user matrix, not a ratio");
  }
  return t;
}

Dataset inject_noise(const Dataset& clean, const NoiseSpec& spec) {
  clean.validate();
  for (const Sample& s : clean.samples)
    if (s.true_label != s.given_label)
      throw std::invalid_argument("inject_noise: source must be clean (true == given)");

  Matrix t;
  if (spec.kind == NoiseKind::explicit_matrix) {
    if (!spec.matrix) throw std::invalid_argument("explicit noise requires a matrix");
    t = *spec.matrix;
    if (t.rows() != clean.num_classes || t.cols() != clean.num_classes)
      throw std::invalid_argument("noise matrix must be C x C");
    for (int r = 0; r < t.rows(); ++r) {
      if ((t.row(r).array() < 0.0).any() ||
          std::abs(t.row(r).sum() - 1.0) > 1e-9)
        throw std::invalid_argument("noise matrix rows must be stochastic");
    }
  } else {
    t = make_transition_matrix(spec.kind, spec.ratio, clean.num_classes);
  }

  std::mt19937_64 rng(spec.seed);
  Dataset noisy = clean;
  for (Sample& s : noisy.samples) {
    s.given_label = sample_row(t, s.true_label, rng);
    s.origin = (s.given_label == s.true_label) ? Origin::clean : Origin::flipped;
  }
  noisy.validate();
  return noisy;
}

Dataset generate_blobs(int num_classes, int per_class, int dim, double separation,
                       std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("generate_blobs: num_classes >= 2");
  if (per_class < 1) throw std::invalid_argument("generate_blobs: per_class >= 1");
  if (dim < 1) throw std::invalid_argument("generate_blobs: dim >= 1");
  if (separation <= 0.0) throw std::invalid_argument("generate_blobs: separation > 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Rejection-sample cluster means from a sphere that grows until all
  // pairwise distances clear the separation.
  Matrix means(num_classes, dim);
  double radius = separation * 1.5;
  int placed = 0;
  int rejects = 0;
  while (placed < num_classes) {
    Vector candidate(dim);
    for (int j = 0; j < dim; ++j) candidate(j) = gauss(rng) * radius;
    bool ok = true;
    for (int c = 0; c < placed; ++c) {
      if ((means.row(c).transpose() - candidate).norm() < separation) {
        ok = false;
        break;
      }
    }
    if (ok) {
      means.row(placed++) = candidate.transpose();
      rejects = 0;
    } else if (++rejects > 200) {
      radius *= 1.3;
      rejects = 0;
    }
  }

  const int n = num_classes * per_class;
  Matrix features(n, dim);
  std::vector<int> labels(n);
  int row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int k = 0; k < per_class; ++k, ++row) {
      for (int j = 0; j < dim; ++j) features(row, j) = means(c, j) + gauss(rng);
      labels[row] = c;
    }
  }
  return make_dataset(features, labels, num_classes, labels);
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction,
                                  std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction > 1.0)
    throw std::invalid_argument("split: test_fraction must be in [0, 1]");
  data.validate();

  std::mt19937_64 rng(seed);
  std::vector<char> is_test(data.samples.size(), 0);
  for (int c = 0; c < data.num_classes; ++c) {
    std::vector<int> pos;
    for (int i = 0; i < data.size(); ++i)
      if (data.samples[i].given_label == c) pos.push_back(i);
    std::shuffle(pos.begin(), pos.end(), rng);
    const int n_test = static_cast<int>(std::lround(test_fraction * pos.size()));
    for (int k = 0; k < n_test; ++k) is_test[pos[k]] = 1;
  }

  Dataset train, test;
  train.num_classes = test.num_classes = data.num_classes;
  train.feature_dim = test.feature_dim = data.feature_dim;
  for (int i = 0; i < data.size(); ++i)
    (is_test[i] ? test : train).samples.push_back(data.samples[i]);
  return {std::move(train), std::move(test)};
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& extra_meta_json) {
  data.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "id,given_label,true_label";
  for (int j = 0; j < data.feature_dim; ++j) out << ",f" << j;
  out << "\n";
  for (const Sample& s : data.samples) {
    out << s.id << ',' << s.given_label << ',' << s.true_label;
    for (int j = 0; j < data.feature_dim; ++j) out << ',' << fmt_double(s.features(j));
    out << "\n";
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());

  json meta;
  meta["num_classes"] = data.num_classes;
  meta["feature_dim"] = data.feature_dim;
  meta["num_samples"] = data.size();
  meta["has_ground_truth"] = data.has_ground_truth();
  if (!extra_meta_json.empty()) {
    json extra = json::parse(extra_meta_json);
    for (auto& [k, v] : extra.items()) meta[k] = v;
  }
  std::ofstream meta_out(meta_path_for(path));
  if (!meta_out) throw std::runtime_error("cannot write meta for: " + path.string());
  meta_out << meta.dump(2) << "\n";
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());

  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("empty dataset file: " + path.string());
  auto cols = split_line(header, ',');
  if (cols.size() < 4 || cols[0] != "id" || cols[1] != "given_label" ||
      cols[2] != "true_label")
    throw std::runtime_error("bad CSV header in " + path.string());
  const int dim = static_cast<int>(cols.size()) - 3;
  for (int j = 0; j < dim; ++j)
    if (cols[3 + j] != "f" + std::to_string(j))
      throw std::runtime_error("bad feature column name in " + path.string());

  Dataset d;
  d.feature_dim = dim;
  std::string line;
  int line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_line(line, ',');
    if (static_cast<int>(fields.size()) != 3 + dim)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": wrong field count");
    Sample s;
    s.id = std::stoi(fields[0]);
    s.given_label = std::stoi(fields[1]);
    s.true_label = std::stoi(fields[2]);
    s.features.resize(dim);
    for (int j = 0; j < dim; ++j) s.features(j) = std::stod(fields[3 + j]);
    if (s.true_label < 0)
      s.origin = Origin::unknown;
    else
      s.origin = (s.true_label == s.given_label) ? Origin::clean : Origin::flipped;
    max_label = std::max({max_label, s.given_label, s.true_label});
    d.samples.push_back(std::move(s));
  }

  const auto meta_path = meta_path_for(path);
  if (std::filesystem::exists(meta_path)) {
    std::ifstream meta_in(meta_path);
    json meta = json::parse(meta_in);
    d.num_classes = meta.at("num_classes").get<int>();
    if (meta.contains("feature_dim") && meta["feature_dim"].get<int>() != dim)
      throw std::runtime_error("meta feature_dim disagrees with CSV in " + path.string());
  } else {
    d.num_classes = max_label + 1;
  }
  d.validate();
  return d;
}

}  // namespace grip
