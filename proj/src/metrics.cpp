#include "grip/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace grip {

SelectionMetrics selection_metrics(const Dataset& data,
                                   const std::vector<Disposition>& dispositions,
                                   const std::vector<int>& pseudo_labels) {
  const int n = data.size();
  if (static_cast<int>(dispositions.size()) != n ||
      static_cast<int>(pseudo_labels.size()) != n)
    throw std::invalid_argument("selection_metrics: vectors must match dataset size");

  SelectionMetrics m;
  if (!data.has_ground_truth()) return m;
  m.available = true;

  int tp = 0, fp = 0, fn = 0;
  int relabeled = 0, relabeled_correct = 0;
  int retained = 0, retained_correct = 0;
  for (int i = 0; i < n; ++i) {
    const Sample& s = data.samples[i];
    const bool truly_noisy = s.origin == Origin::flipped;
    const bool flagged = dispositions[i] != Disposition::clean;
    if (flagged && truly_noisy) ++tp;
    if (flagged && !truly_noisy) ++fp;
    if (!flagged && truly_noisy) ++fn;

    if (dispositions[i] == Disposition::relabeled) {
      ++relabeled;
      if (pseudo_labels[i] == s.true_label) ++relabeled_correct;
    }
    if (dispositions[i] != Disposition::discarded) {
      ++retained;
      const int effective =
          dispositions[i] == Disposition::relabeled ? pseudo_labels[i] : s.given_label;
      if (effective == s.true_label) ++retained_correct;
    }
  }

  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  if (relabeled > 0)
    m.relabel_accuracy = static_cast<double>(relabeled_correct) / relabeled;
  if (retained > 0)
    m.retained_label_accuracy = static_cast<double>(retained_correct) / retained;
  return m;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / values.size();
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / values.size())};
}

}  // namespace grip
