#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grip/types.hpp"

namespace grip {

enum class Origin { clean, flipped, unknown };

inline const char* to_string(Origin o) {
  switch (o) {
    case Origin::clean: return "clean";
    case Origin::flipped: return "flipped";
    case Origin::unknown: return "unknown";
  }
  return "?";
}

struct Sample {
  int id = 0;
  Vector features;
  int given_label = 0;
  int true_label = -1;  // -1 means unknown
  Origin origin = Origin::unknown;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  int feature_dim = 0;

  int size() const { return static_cast<int>(samples.size()); }
  bool has_ground_truth() const;

  /// Throws std::invalid_argument if any structural invariant is broken:
  /// duplicate ids, mismatched feature dims, labels outside [0, C), or an
  /// origin flag inconsistent with the label pair.
  void validate() const;
};

/// Builds a dataset from a feature matrix and labels. true_labels may be
/// empty (all unknown) or one entry per row.
Dataset make_dataset(const Matrix& features, const std::vector<int>& given_labels,
                     int num_classes, const std::vector<int>& true_labels = {});

enum class NoiseKind { symmetric, asymmetric, explicit_matrix };

NoiseKind noise_kind_from_string(const std::string& s);
const char* to_string(NoiseKind k);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::optional<Matrix> matrix;  // required iff kind == explicit_matrix
};

/// Row-stochastic label transition matrix. Symmetric: diagonal 1-ratio,
/// every off-diagonal ratio/(C-1). Asymmetric: diagonal 1-ratio and a
/// single mass ratio on the next class (circulant).
Matrix make_transition_matrix(NoiseKind kind, double ratio, int num_classes);

/// Resamples each given label from the transition-matrix row of its true
/// label. Input must be a clean source (true == given everywhere).
Dataset inject_noise(const Dataset& clean, const NoiseSpec& spec);

/// C isotropic unit-variance Gaussian clusters with pairwise mean
/// distances >= separation. Labels are clean.
Dataset generate_blobs(int num_classes, int per_class, int dim, double separation,
                       std::uint64_t seed);

/// Stratified disjoint split; sample ids are preserved (so the two halves
/// carry disjoint, non-contiguous ids). Returns (train, test).
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction,
                                  std::uint64_t seed);

/// CSV schema: header `id,given_label,true_label,f0,...,f{D-1}`, one row
/// per sample, true_label -1 when unknown. A sidecar `<stem>.meta.json`
/// carries num_classes / feature_dim / num_samples plus any extra
/// metadata passed at save time.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& extra_meta_json = "");

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

}  // namespace grip
