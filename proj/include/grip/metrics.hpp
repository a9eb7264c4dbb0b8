#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "grip/dataset.hpp"
#include "grip/types.hpp"

namespace grip {

/// Quality of a purification pass measured against ground-truth noise
/// flags. Positive class = origin flipped; predicted positive =
/// disposition relabeled or discarded. Fields are absent when their
/// denominator is empty (never reported as 0).
struct SelectionMetrics {
  bool available = false;  // false when the dataset lacks ground truth
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> relabel_accuracy;        // over the relabeled set
  std::optional<double> retained_label_accuracy; // over clean + relabeled
};

/// dispositions and pseudo_labels are indexed like data.samples;
/// pseudo_labels[i] is -1 unless sample i was relabeled.
SelectionMetrics selection_metrics(const Dataset& data,
                                   const std::vector<Disposition>& dispositions,
                                   const std::vector<int>& pseudo_labels);

/// Exact two-pass mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace grip
