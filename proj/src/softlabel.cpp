#include "grip/softlabel.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace grip {

SoftLabelMatrix init_soft_labels(int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("init_soft_labels: num_classes >= 2");
  SoftLabelMatrix s;
  s.S = Matrix::Constant(num_classes, num_classes, 1.0 / num_classes);
  s.epoch = 0;
  return s;
}

EpochAccumulator::EpochAccumulator(int num_classes)
    : sums(Matrix::Zero(num_classes, num_classes)),
      counts(Eigen::VectorXi::Zero(num_classes)) {
  if (num_classes < 2)
    throw std::invalid_argument("EpochAccumulator: num_classes >= 2");
}

void EpochAccumulator::reset() {
  sums.setZero();
  counts.setZero();
}

void accumulate(EpochAccumulator& acc, const ProbRow& pred, int given_label) {
  const int c = acc.num_classes();
  if (pred.size() != c)
    throw std::invalid_argument("accumulate: prediction width mismatch");
  if (given_label < 0 || given_label >= c)
    throw std::invalid_argument("accumulate: label out of range");

  int argmax = 0;
  for (int k = 1; k < c; ++k)
    if (pred(k) > pred(argmax)) argmax = k;
  if (argmax != given_label) return;

  acc.sums.row(given_label) += pred;
  acc.counts(given_label) += 1;
}

void merge(EpochAccumulator& into, const EpochAccumulator& other) {
  if (into.num_classes() != other.num_classes())
    throw std::invalid_argument("merge: accumulator width mismatch");
  into.sums += other.sums;
  into.counts += other.counts;
}

SoftLabelMatrix finalize_epoch(const EpochAccumulator& acc, const SoftLabelMatrix& prev,
                               double momentum) {
  if (momentum < 0.0 || momentum > 1.0)
    throw std::invalid_argument("finalize_epoch: momentum must be in [0, 1]");
  if (prev.S.rows() != acc.num_classes())
    throw std::invalid_argument("finalize_epoch: class count mismatch");

  SoftLabelMatrix next = prev;
  next.epoch = prev.epoch + 1;
  for (int y = 0; y < acc.num_classes(); ++y) {
    if (acc.counts(y) == 0) continue;  // no correct predictions: carry forward
    const ProbRow avg = acc.sums.row(y) / acc.counts(y);
    next.S.row(y) = momentum * prev.S.row(y) + (1.0 - momentum) * avg;
  }
  return next;
}

void save_softlabels_csv(const SoftLabelMatrix& labels,
                         const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write soft labels: " + path.string());
  char buf[32];
  for (int r = 0; r < labels.S.rows(); ++r) {
    for (int c = 0; c < labels.S.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", labels.S(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace grip
