#pragma once

#include <utility>
#include <vector>

#include "grip/dataset.hpp"
#include "grip/metrics.hpp"
#include "grip/softlabel.hpp"
#include "grip/types.hpp"

namespace grip {

/// Jensen-Shannon divergence with base-2 logarithms: symmetric and bounded
/// to [0, 1]. Inputs are clamped strictly positive before the logs.
double js_divergence(const ProbRow& p, const ProbRow& q);

struct DivergenceRecord {
  int sample_id = 0;
  double d = 0.0;           // JS(prediction, soft label of the given class)
  double d_hat = 0.0;       // JS(prediction, soft label of the predicted class)
  int predicted_label = 0;
};

/// thr = mean(d) + alpha * population_std(d), over the entire collection.
double compute_threshold(const std::vector<double>& d_values, double alpha);

/// Clean iff d <= thr (boundary inclusive). Returns (clean ids, noisy ids)
/// in input order.
std::pair<std::vector<int>, std::vector<int>> partition(
    const std::vector<DivergenceRecord>& records, double thr);

struct RelabelDecision {
  int sample_id = 0;
  int pseudo_label = 0;
};

struct RelabelSplit {
  std::vector<RelabelDecision> relabel;  // d_hat < tau
  std::vector<int> discard;              // d_hat >= tau
};

RelabelSplit relabel_split(const std::vector<DivergenceRecord>& noisy_records, double tau);

struct PurifyCounts {
  int clean = 0;
  int relabeled = 0;
  int discarded = 0;
};

struct PurificationReport {
  int epoch = 0;
  double thr = 0.0;
  PurifyCounts counts;
  std::vector<std::pair<int, Disposition>> dispositions;  // (sample id, disposition)
  SelectionMetrics metrics;  // metrics.available == false without ground truth
};

/// dispositions/pseudo_labels indexed like data.samples.
PurificationReport evaluate_selection(const Dataset& data,
                                      const std::vector<Disposition>& dispositions,
                                      const std::vector<int>& pseudo_labels,
                                      int epoch, double thr);

}  // namespace grip
