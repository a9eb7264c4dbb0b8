#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "grip/dataset.hpp"
#include "grip/metrics.hpp"
#include "grip/model.hpp"
#include "grip/purify.hpp"
#include "grip/softlabel.hpp"

namespace grip {

/// Linear ramp from start to end over ramp_epochs epochs after activation,
/// then constant at end.
struct AlphaSchedule {
  double start = 1.0;
  double end = 0.2;
  int ramp_epochs = 5;

  double at(int epochs_since_activation) const;
};

struct TrainConfig {
  int epochs = 40;
  int warmup = 5;              // purification activates at epoch == warmup
  double ema_momentum = 0.5;   // m of the soft-label EMA
  double w = 0.5;              // soft-loss weight
  double gamma = 0.5;          // entropy-regularization weight
  AlphaSchedule alpha;
  double tau = 0.03;           // relabel/discard threshold on d_hat
  int batch_size = 128;
  double lr = 0.05;
  int lr_decay_every = 0;      // 0 disables the step schedule
  double lr_decay_factor = 0.5;
  double sgd_momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  Architecture arch = Architecture::mlp1;
  int hidden = 64;
  int eval_every = 1;          // test-set evaluation cadence (final epoch always)
  int checkpoint_every = 0;    // 0: checkpoint only the final epoch
  int threads = 1;             // worker fan-out for the full inference pass

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  // Epoch means over batches; ce/soft/me cover the supervised partition,
  // me_discard the discarded one.
  double ce = 0.0;
  double soft = 0.0;
  double me = 0.0;
  double me_discard = 0.0;
  double total = 0.0;
  double test_aca = std::numeric_limits<double>::quiet_NaN();  // NaN: not evaluated
  bool purify_active = false;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double thr = std::numeric_limits<double>::quiet_NaN();
  PurifyCounts counts;
  SelectionMetrics selection;
  double mean_d_gt_clean = std::numeric_limits<double>::quiet_NaN();
  double mean_d_gt_noisy = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;  // informational; deliberately kept out of epochs.jsonl
};

/// One line of epochs.jsonl. Timing is excluded so identical runs produce
/// byte-identical logs.
std::string to_jsonl_line(const EpochLog& log);
EpochLog epoch_log_from_json_line(const std::string& line);

struct TrainResult {
  ClassifierParams params;
  SoftLabelMatrix soft_labels;
  std::vector<EpochLog> logs;
};

struct TrainIO {
  std::optional<std::filesystem::path> run_dir;
  std::optional<std::filesystem::path> resume_from;
};

/// Raised when training cannot continue (non-finite loss, or an epoch that
/// selected nothing for supervised training).
struct TrainAbortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs the full training loop: warm-up epochs train every sample with the
/// group-regularization loss; later epochs run a frozen full inference
/// pass, threshold the JS divergences globally, relabel or discard the
/// noisy set, and train clean+relabeled with the group loss plus an
/// entropy term on the discards. Serial mode (threads == 1) is
/// deterministic for a fixed seed.
TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& test_set, const TrainIO& io = {});

/// Fraction of test samples whose argmax prediction equals the label;
/// argmax ties break to the lowest class index.
double evaluate(const ClassifierParams& params, const Dataset& test_set);

// Deterministic helpers shared with tests.
std::mt19937_64 shuffle_rng_for_seed(std::uint64_t seed);
std::vector<std::vector<int>> make_epoch_batches(int n, int batch_size,
                                                 std::mt19937_64& rng);
Matrix gather_features(const Dataset& data, const std::vector<int>& positions);

/// Full inference pass with the model frozen; one record per sample in
/// dataset order. Embarrassingly parallel and bit-stable across thread
/// counts.
std::vector<DivergenceRecord> compute_divergences(const ClassifierParams& params,
                                                  const Dataset& data,
                                                  const SoftLabelMatrix& soft_labels,
                                                  int threads = 1);

struct RunState {
  ClassifierParams params;
  ParamTensors velocity;
  SoftLabelMatrix soft_labels;
  int next_epoch = 0;
  std::string shuffle_rng_state;
  std::uint64_t config_fingerprint = 0;
};

void save_checkpoint(const std::filesystem::path& path, const RunState& state);
RunState load_checkpoint(const std::filesystem::path& path);
std::uint64_t config_fingerprint(const TrainConfig& config);

}  // namespace grip
