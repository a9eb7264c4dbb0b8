#include "grip/purify.hpp"

#include <cmath>
#include <stdexcept>

#include "grip/metrics.hpp"

namespace grip {

double js_divergence(const ProbRow& p, const ProbRow& q) {
  if (p.size() != q.size() || p.size() == 0)
    throw std::invalid_argument("js_divergence: length mismatch");
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double pi = clamp_prob(p(i));
    const double qi = clamp_prob(q(i));
    const double mi = 0.5 * (pi + qi);
    d += 0.5 * pi * std::log2(pi / mi) + 0.5 * qi * std::log2(qi / mi);
  }
  // Analytically in [0, 1]; clamp away FP rounding at the endpoints.
  return std::min(1.0, std::max(0.0, d));
}

double compute_threshold(const std::vector<double>& d_values, double alpha) {
  const auto [mean, std_dev] = mean_std(d_values);
  return mean + alpha * std_dev;
}

std::pair<std::vector<int>, std::vector<int>> partition(
    const std::vector<DivergenceRecord>& records, double thr) {
  std::vector<int> clean, noisy;
  for (const DivergenceRecord& r : records)
    (r.d <= thr ? clean : noisy).push_back(r.sample_id);
  return {std::move(clean), std::move(noisy)};
}

RelabelSplit relabel_split(const std::vector<DivergenceRecord>& noisy_records,
                           double tau) {
  RelabelSplit out;
  for (const DivergenceRecord& r : noisy_records) {
    if (r.d_hat < tau)
      out.relabel.push_back({r.sample_id, r.predicted_label});
    else
      out.discard.push_back(r.sample_id);
  }
  return out;
}

PurificationReport evaluate_selection(const Dataset& data,
                                      const std::vector<Disposition>& dispositions,
                                      const std::vector<int>& pseudo_labels,
                                      int epoch, double thr) {
  if (static_cast<int>(dispositions.size()) != data.size() ||
      static_cast<int>(pseudo_labels.size()) != data.size())
    throw std::invalid_argument("evaluate_selection: vectors must match dataset size");

  PurificationReport rep;
  rep.epoch = epoch;
  rep.thr = thr;
  rep.dispositions.reserve(data.size());
  for (int i = 0; i < data.size(); ++i) {
    switch (dispositions[i]) {
      case Disposition::clean: ++rep.counts.clean; break;
      case Disposition::relabeled: ++rep.counts.relabeled; break;
      case Disposition::discarded: ++rep.counts.discarded; break;
    }
    rep.dispositions.emplace_back(data.samples[i].id, dispositions[i]);
  }
  rep.metrics = selection_metrics(data, dispositions, pseudo_labels);
  return rep;
}

}  // namespace grip
