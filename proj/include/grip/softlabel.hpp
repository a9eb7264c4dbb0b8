#pragma once

#include <filesystem>

#include "grip/types.hpp"

namespace grip {

/// Row y is the estimated soft label of class y: the EMA-smoothed average
/// prediction over correctly classified samples of that class.
struct SoftLabelMatrix {
  Matrix S;       // C x C, row-stochastic
  int epoch = 0;
};

/// Uniform rows 1/C at epoch 0, so first-epoch supervision and divergences
/// are well defined.
SoftLabelMatrix init_soft_labels(int num_classes);

/// Per-epoch running sums of predictions on correctly classified samples,
/// zeroed at every epoch start. Supports merging of partial accumulators.
struct EpochAccumulator {
  Matrix sums;            // C x C; row y = sum of predictions credited to class y
  Eigen::VectorXi counts; // per-class number of correct predictions

  explicit EpochAccumulator(int num_classes);
  void reset();
  int num_classes() const { return static_cast<int>(counts.size()); }
};

/// Credits pred to class given_label only when argmax(pred) == given_label
/// (ties break to the lowest class index).
void accumulate(EpochAccumulator& acc, const ProbRow& pred, int given_label);

void merge(EpochAccumulator& into, const EpochAccumulator& other);

/// EMA update: rows with at least one correct prediction become
/// m*prev + (1-m)*epoch_average; rows never hit carry the previous soft
/// label forward. Increments the epoch counter.
SoftLabelMatrix finalize_epoch(const EpochAccumulator& acc, const SoftLabelMatrix& prev,
                               double momentum);

/// C rows of C comma-separated probabilities.
void save_softlabels_csv(const SoftLabelMatrix& labels, const std::filesystem::path& path);

}  // namespace grip
