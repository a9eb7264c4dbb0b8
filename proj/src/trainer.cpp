#include "grip/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "grip/config.hpp"
#include "grip/losses.hpp"
#include "grip/version.hpp"

namespace grip {
namespace {

using json = nlohmann::ordered_json;

constexpr char kCheckpointMagic[8] = {'G', 'R', 'I', 'P', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double num_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null())
    return std::numeric_limits<double>::quiet_NaN();
  return j[key].get<double>();
}

json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

int argmax_row(const Matrix& probs, int row) {
  int best = 0;
  for (int c = 1; c < probs.cols(); ++c)
    if (probs(row, c) > probs(row, best)) best = c;
  return best;
}

// --- binary checkpoint primitives ---

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_pod<std::int64_t>(out, m.rows());
  write_pod<std::int64_t>(out, m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
}

Matrix read_matrix(std::istream& in) {
  const auto rows = read_pod<std::int64_t>(in);
  const auto cols = read_pod<std::int64_t>(in);
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 30))
    throw std::runtime_error("checkpoint: implausible matrix shape");
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = read_pod<double>(in);
  return m;
}

void write_tensors(std::ostream& out, const ParamTensors& t) {
  write_matrix(out, t.W1);
  write_matrix(out, t.b1);
  write_matrix(out, t.W2);
  write_matrix(out, t.b2);
}

ParamTensors read_tensors(std::istream& in) {
  ParamTensors t;
  t.W1 = read_matrix(in);
  t.b1 = read_matrix(in);
  t.W2 = read_matrix(in);
  t.b2 = read_matrix(in);
  return t;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_purify_csv(const std::filesystem::path& path, const Dataset& data,
                      const std::vector<DivergenceRecord>& records,
                      const std::vector<Disposition>& dispositions,
                      const std::vector<int>& pseudo_labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sample_id,d,d_hat,disposition,pseudo_label,true_label_match\n";
  for (int i = 0; i < data.size(); ++i) {
    const Sample& s = data.samples[i];
    int match = -1;
    if (s.true_label >= 0) {
      const int effective = dispositions[i] == Disposition::relabeled
                                ? pseudo_labels[i]
                                : s.given_label;
      match = effective == s.true_label ? 1 : 0;
    }
    out << s.id << ',' << fmt_g(records[i].d) << ',' << fmt_g(records[i].d_hat) << ','
        << to_string(dispositions[i]) << ',' << pseudo_labels[i] << ',' << match
        << "\n";
  }
}

struct EpochAggregates {
  double ce_sum = 0, soft_sum = 0, me_sum = 0, me_disc_sum = 0, total_sum = 0;
  int sup_batches = 0, disc_batches = 0, batches = 0;
};

}  // namespace

double AlphaSchedule::at(int epochs_since_activation) const {
  if (ramp_epochs <= 0 || epochs_since_activation >= ramp_epochs) return end;
  if (epochs_since_activation < 0)
    throw std::invalid_argument("alpha schedule queried before activation");
  return start + (end - start) * static_cast<double>(epochs_since_activation) /
                     static_cast<double>(ramp_epochs);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (warmup < 0) throw std::invalid_argument("config: warmup must be >= 0");
  if (ema_momentum < 0.0 || ema_momentum > 1.0)
    throw std::invalid_argument("config: ema_momentum must be in [0, 1]");
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("config: w must be in [0, 1]");
  if (gamma < 0.0) throw std::invalid_argument("config: gamma must be >= 0");
  if (alpha.ramp_epochs < 0)
    throw std::invalid_argument("config: alpha.ramp_epochs must be >= 0");
  if (tau < 0.0) throw std::invalid_argument("config: tau must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
  if (lr_decay_every < 0)
    throw std::invalid_argument("config: lr_decay_every must be >= 0");
  if (lr_decay_factor <= 0.0 || lr_decay_factor > 1.0)
    throw std::invalid_argument("config: lr_decay_factor must be in (0, 1]");
  if (sgd_momentum < 0.0 || sgd_momentum >= 1.0)
    throw std::invalid_argument("config: sgd_momentum must be in [0, 1)");
  if (weight_decay < 0.0)
    throw std::invalid_argument("config: weight_decay must be >= 0");
  if (arch == Architecture::mlp1 && hidden < 1)
    throw std::invalid_argument("config: hidden must be >= 1 for mlp1");
  if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
  if (checkpoint_every < 0)
    throw std::invalid_argument("config: checkpoint_every must be >= 0");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

std::string to_jsonl_line(const EpochLog& log) {
  json j;
  j["epoch"] = log.epoch;
  j["lr"] = log.lr;
  j["ce"] = log.ce;
  j["soft"] = log.soft;
  j["me"] = log.me;
  j["me_discard"] = log.me_discard;
  j["total"] = log.total;
  j["test_aca"] = num_or_null(log.test_aca);
  j["purify_active"] = log.purify_active;
  j["alpha"] = num_or_null(log.alpha);
  j["thr"] = num_or_null(log.thr);
  j["counts"] = {{"clean", log.counts.clean},
                 {"relabeled", log.counts.relabeled},
                 {"discarded", log.counts.discarded}};
  if (log.selection.available) {
    json sel;
    sel["precision"] = opt_to_json(log.selection.precision);
    sel["recall"] = opt_to_json(log.selection.recall);
    sel["f1"] = opt_to_json(log.selection.f1);
    sel["relabel_accuracy"] = opt_to_json(log.selection.relabel_accuracy);
    sel["retained_label_accuracy"] = opt_to_json(log.selection.retained_label_accuracy);
    j["selection"] = std::move(sel);
  } else {
    j["selection"] = nullptr;
  }
  j["mean_d_gt_clean"] = num_or_null(log.mean_d_gt_clean);
  j["mean_d_gt_noisy"] = num_or_null(log.mean_d_gt_noisy);
  return j.dump();
}

EpochLog epoch_log_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  EpochLog log;
  log.epoch = j.at("epoch").get<int>();
  log.lr = j.at("lr").get<double>();
  log.ce = j.at("ce").get<double>();
  log.soft = j.at("soft").get<double>();
  log.me = j.at("me").get<double>();
  log.me_discard = j.at("me_discard").get<double>();
  log.total = j.at("total").get<double>();
  log.test_aca = num_from(j, "test_aca");
  log.purify_active = j.at("purify_active").get<bool>();
  log.alpha = num_from(j, "alpha");
  log.thr = num_from(j, "thr");
  log.counts.clean = j.at("counts").at("clean").get<int>();
  log.counts.relabeled = j.at("counts").at("relabeled").get<int>();
  log.counts.discarded = j.at("counts").at("discarded").get<int>();
  if (j.contains("selection") && !j["selection"].is_null()) {
    log.selection.available = true;
    log.selection.precision = opt_from(j["selection"], "precision");
    log.selection.recall = opt_from(j["selection"], "recall");
    log.selection.f1 = opt_from(j["selection"], "f1");
    log.selection.relabel_accuracy = opt_from(j["selection"], "relabel_accuracy");
    log.selection.retained_label_accuracy =
        opt_from(j["selection"], "retained_label_accuracy");
  }
  log.mean_d_gt_clean = num_from(j, "mean_d_gt_clean");
  log.mean_d_gt_noisy = num_from(j, "mean_d_gt_noisy");
  return log;
}

std::mt19937_64 shuffle_rng_for_seed(std::uint64_t seed) {
  // Decorrelated from the parameter-init stream, which uses the raw seed.
  return std::mt19937_64(seed ^ 0x9E3779B97F4A7C15ULL);
}

std::vector<std::vector<int>> make_epoch_batches(int n, int batch_size,
                                                 std::mt19937_64& rng) {
  if (n < 1 || batch_size < 1)
    throw std::invalid_argument("make_epoch_batches: n and batch_size must be >= 1");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

Matrix gather_features(const Dataset& data, const std::vector<int>& positions) {
  Matrix x(static_cast<int>(positions.size()), data.feature_dim);
  for (int i = 0; i < static_cast<int>(positions.size()); ++i)
    x.row(i) = data.samples[positions[i]].features.transpose();
  return x;
}

std::vector<DivergenceRecord> compute_divergences(const ClassifierParams& params,
                                                  const Dataset& data,
                                                  const SoftLabelMatrix& soft_labels,
                                                  int threads) {
  const int n = data.size();
  if (n == 0) return {};
  if (soft_labels.S.rows() != data.num_classes)
    throw std::invalid_argument("compute_divergences: soft-label class mismatch");

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Matrix features = gather_features(data, all);

  std::vector<DivergenceRecord> records(n);
  auto work = [&](int lo, int hi) {
    if (lo >= hi) return;
    const Matrix probs = forward(params, features.middleRows(lo, hi - lo)).probs;
    for (int i = lo; i < hi; ++i) {
      const ProbRow p = probs.row(i - lo);
      const int predicted = argmax_row(probs, i - lo);
      DivergenceRecord& r = records[i];
      r.sample_id = data.samples[i].id;
      r.predicted_label = predicted;
      r.d = js_divergence(p, soft_labels.S.row(data.samples[i].given_label));
      r.d_hat = js_divergence(p, soft_labels.S.row(predicted));
    }
  };

  if (threads <= 1) {
    work(0, n);
  } else {
    const int chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work, t * chunk, std::min(n, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  }
  return records;
}

double evaluate(const ClassifierParams& params, const Dataset& test_set) {
  if (test_set.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  std::vector<int> all(test_set.size());
  std::iota(all.begin(), all.end(), 0);
  const Matrix probs = forward(params, gather_features(test_set, all)).probs;
  int correct = 0;
  for (int i = 0; i < test_set.size(); ++i)
    if (argmax_row(probs, i) == test_set.samples[i].given_label) ++correct;
  return static_cast<double>(correct) / test_set.size();
}

std::uint64_t config_fingerprint(const TrainConfig& config) {
  return fnv1a64(config_to_json(config));
}

void save_checkpoint(const std::filesystem::path& path, const RunState& state) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, kCheckpointVersion);
  write_pod<std::uint8_t>(out, state.params.arch == Architecture::mlp1 ? 1 : 0);
  write_pod<std::int32_t>(out, state.params.input_dim);
  write_pod<std::int32_t>(out, state.params.hidden_dim);
  write_pod<std::int32_t>(out, state.params.num_classes);
  write_tensors(out, state.params.t);
  write_tensors(out, state.velocity);
  write_pod<std::int32_t>(out, state.soft_labels.epoch);
  write_matrix(out, state.soft_labels.S);
  write_pod<std::int32_t>(out, state.next_epoch);
  write_pod<std::uint64_t>(out, state.config_fingerprint);
  write_pod<std::uint64_t>(out, state.shuffle_rng_state.size());
  out.write(state.shuffle_rng_state.data(),
            static_cast<std::streamsize>(state.shuffle_rng_state.size()));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

RunState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  if (read_pod<std::uint32_t>(in) != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());

  RunState s;
  s.params.arch = read_pod<std::uint8_t>(in) ? Architecture::mlp1 : Architecture::linear;
  s.params.input_dim = read_pod<std::int32_t>(in);
  s.params.hidden_dim = read_pod<std::int32_t>(in);
  s.params.num_classes = read_pod<std::int32_t>(in);
  s.params.t = read_tensors(in);
  s.velocity = read_tensors(in);
  s.soft_labels.epoch = read_pod<std::int32_t>(in);
  s.soft_labels.S = read_matrix(in);
  s.next_epoch = read_pod<std::int32_t>(in);
  s.config_fingerprint = read_pod<std::uint64_t>(in);
  const auto len = read_pod<std::uint64_t>(in);
  if (len > (1ULL << 20)) throw std::runtime_error("checkpoint: implausible RNG state");
  s.shuffle_rng_state.resize(len);
  in.read(s.shuffle_rng_state.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& test_set, const TrainIO& io) {
  config.validate();
  train_set.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (test_set.size() > 0) {
    test_set.validate();
    if (test_set.num_classes != train_set.num_classes ||
        test_set.feature_dim != train_set.feature_dim)
      throw std::invalid_argument("train: train/test shape mismatch");
  }

  const int n = train_set.size();
  const int num_classes = train_set.num_classes;
  const std::uint64_t fingerprint = config_fingerprint(config);

  ClassifierParams params;
  SoftLabelMatrix soft_labels;
  std::mt19937_64 shuffle_rng;
  OptimizerState opt =
      make_optimizer(init_params(config.arch, train_set.feature_dim,
                                 config.arch == Architecture::mlp1 ? config.hidden : 0,
                                 num_classes, config.seed),
                     config.lr, config.sgd_momentum, config.weight_decay);
  int start_epoch = 0;

  if (io.resume_from) {
    RunState st = load_checkpoint(*io.resume_from);
    if (st.config_fingerprint != fingerprint)
      throw std::runtime_error("resume: checkpoint was produced by a different config");
    if (st.params.input_dim != train_set.feature_dim ||
        st.params.num_classes != num_classes)
      throw std::runtime_error("resume: checkpoint shape does not match dataset");
    params = std::move(st.params);
    opt.velocity = std::move(st.velocity);
    soft_labels = std::move(st.soft_labels);
    start_epoch = st.next_epoch;
    std::istringstream rng_in(st.shuffle_rng_state);
    rng_in >> shuffle_rng;
    if (!rng_in) throw std::runtime_error("resume: corrupt RNG state");
  } else {
    params = init_params(config.arch, train_set.feature_dim,
                         config.arch == Architecture::mlp1 ? config.hidden : 0,
                         num_classes, config.seed);
    soft_labels = init_soft_labels(num_classes);
    shuffle_rng = shuffle_rng_for_seed(config.seed);
  }

  std::ofstream jsonl;
  if (io.run_dir) {
    std::filesystem::create_directories(*io.run_dir);
    save_config_file(*io.run_dir / "config.json", config);
    jsonl.open(*io.run_dir / "epochs.jsonl",
               start_epoch > 0 ? std::ios::app : std::ios::trunc);
    if (!jsonl) throw std::runtime_error("cannot write epochs.jsonl");
  }

  auto snapshot = [&](int next_epoch) {
    RunState st;
    st.params = params;
    st.velocity = opt.velocity;
    st.soft_labels = soft_labels;
    st.next_epoch = next_epoch;
    std::ostringstream rng_out;
    rng_out << shuffle_rng;
    st.shuffle_rng_state = rng_out.str();
    st.config_fingerprint = fingerprint;
    return st;
  };
  RunState last_good = snapshot(start_epoch);

  auto abort_run = [&](const std::string& why) {
    if (io.run_dir) save_checkpoint(*io.run_dir / "checkpoint_abort.bin", last_good);
    throw TrainAbortError(why + (io.run_dir
                                     ? "; last good state saved to checkpoint_abort.bin"
                                     : ""));
  };

  TrainResult result;
  const auto run_start = std::chrono::steady_clock::now();

  for (int t = start_epoch; t < config.epochs; ++t) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const bool purify_active = t >= config.warmup;

    EpochLog log;
    log.epoch = t;
    const int decay_steps =
        config.lr_decay_every > 0 ? t / config.lr_decay_every : 0;
    opt.learning_rate = config.lr * std::pow(config.lr_decay_factor, decay_steps);
    log.lr = opt.learning_rate;
    log.purify_active = purify_active;

    std::vector<Disposition> dispositions(n, Disposition::clean);
    std::vector<int> pseudo_labels(n, -1);

    if (purify_active) {
      const std::vector<DivergenceRecord> records =
          compute_divergences(params, train_set, soft_labels, config.threads);
      std::vector<double> d_values(n);
      for (int i = 0; i < n; ++i) d_values[i] = records[i].d;

      log.alpha = config.alpha.at(t - config.warmup);
      log.thr = compute_threshold(d_values, log.alpha);

      std::unordered_map<int, int> pos_of;
      pos_of.reserve(n);
      for (int i = 0; i < n; ++i) pos_of.emplace(records[i].sample_id, i);

      const auto [clean_ids, noisy_ids] = partition(records, log.thr);
      std::vector<DivergenceRecord> noisy_records;
      noisy_records.reserve(noisy_ids.size());
      for (int id : noisy_ids) noisy_records.push_back(records[pos_of.at(id)]);
      const RelabelSplit rs = relabel_split(noisy_records, config.tau);

      for (const RelabelDecision& rd : rs.relabel) {
        const int pos = pos_of.at(rd.sample_id);
        dispositions[pos] = Disposition::relabeled;
        pseudo_labels[pos] = rd.pseudo_label;
      }
      for (int id : rs.discard) dispositions[pos_of.at(id)] = Disposition::discarded;

      log.counts.clean = static_cast<int>(clean_ids.size());
      log.counts.relabeled = static_cast<int>(rs.relabel.size());
      log.counts.discarded = static_cast<int>(rs.discard.size());
      log.selection = selection_metrics(train_set, dispositions, pseudo_labels);

      if (train_set.has_ground_truth()) {
        double sum_clean = 0, sum_noisy = 0;
        int n_clean = 0, n_noisy = 0;
        for (int i = 0; i < n; ++i) {
          if (train_set.samples[i].origin == Origin::flipped) {
            sum_noisy += records[i].d;
            ++n_noisy;
          } else {
            sum_clean += records[i].d;
            ++n_clean;
          }
        }
        if (n_clean > 0) log.mean_d_gt_clean = sum_clean / n_clean;
        if (n_noisy > 0) log.mean_d_gt_noisy = sum_noisy / n_noisy;
      }

      if (io.run_dir)
        write_purify_csv(*io.run_dir / ("purify_epoch_" + std::to_string(t) + ".csv"),
                         train_set, records, dispositions, pseudo_labels);

      if (log.counts.clean + log.counts.relabeled == 0)
        abort_run("epoch " + std::to_string(t) +
                  " selected no samples for supervised training; consider a larger "
                  "alpha or tau");
    }

    EpochAccumulator acc(num_classes);
    EpochAggregates agg;

    for (const std::vector<int>& batch : make_epoch_batches(n, config.batch_size,
                                                            shuffle_rng)) {
      std::vector<int> sup_rows, disc_rows;
      for (int k = 0; k < static_cast<int>(batch.size()); ++k)
        (dispositions[batch[k]] == Disposition::discarded ? disc_rows : sup_rows)
            .push_back(k);

      const Matrix x = gather_features(train_set, batch);
      const PredictionBatch pred = forward(params, x);
      Matrix dlogits = Matrix::Zero(pred.probs.rows(), pred.probs.cols());
      double batch_loss = 0.0;

      if (!sup_rows.empty()) {
        Matrix sup_probs(sup_rows.size(), num_classes);
        Matrix targets(sup_rows.size(), num_classes);
        std::vector<int> labels(sup_rows.size());
        for (int k = 0; k < static_cast<int>(sup_rows.size()); ++k) {
          const int pos = batch[sup_rows[k]];
          sup_probs.row(k) = pred.probs.row(sup_rows[k]);
          labels[k] = dispositions[pos] == Disposition::relabeled
                          ? pseudo_labels[pos]
                          : train_set.samples[pos].given_label;
          targets.row(k) = soft_labels.S.row(labels[k]);
        }
        const GrResult gr =
            gr_loss(sup_probs, labels, targets, {config.w, config.gamma});
        for (int k = 0; k < static_cast<int>(sup_rows.size()); ++k)
          dlogits.row(sup_rows[k]) = gr.dlogits.row(k);
        batch_loss += gr.parts.total;
        agg.ce_sum += gr.parts.ce;
        agg.soft_sum += gr.parts.soft;
        agg.me_sum += gr.parts.me;
        ++agg.sup_batches;

        for (int k = 0; k < static_cast<int>(sup_rows.size()); ++k)
          accumulate(acc, ProbRow(sup_probs.row(k)), labels[k]);
      }

      if (!disc_rows.empty()) {
        Matrix disc_probs(disc_rows.size(), num_classes);
        for (int k = 0; k < static_cast<int>(disc_rows.size()); ++k)
          disc_probs.row(k) = pred.probs.row(disc_rows[k]);
        const LossResult me2 = me_loss(disc_probs);
        for (int k = 0; k < static_cast<int>(disc_rows.size()); ++k)
          dlogits.row(disc_rows[k]) = me2.dlogits.row(k);
        batch_loss += me2.value;
        agg.me_disc_sum += me2.value;
        ++agg.disc_batches;
      }

      if (!std::isfinite(batch_loss))
        abort_run("non-finite loss at epoch " + std::to_string(t));
      agg.total_sum += batch_loss;
      ++agg.batches;

      sgd_step(params, backward(params, x, dlogits), opt);
    }

    soft_labels = finalize_epoch(acc, soft_labels, config.ema_momentum);

    log.ce = agg.sup_batches ? agg.ce_sum / agg.sup_batches : 0.0;
    log.soft = agg.sup_batches ? agg.soft_sum / agg.sup_batches : 0.0;
    log.me = agg.sup_batches ? agg.me_sum / agg.sup_batches : 0.0;
    log.me_discard = agg.disc_batches ? agg.me_disc_sum / agg.disc_batches : 0.0;
    log.total = agg.batches ? agg.total_sum / agg.batches : 0.0;

    if (test_set.size() > 0 &&
        (t % config.eval_every == 0 || t == config.epochs - 1))
      log.test_aca = evaluate(params, test_set);

    log.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - epoch_start)
                      .count();

    last_good = snapshot(t + 1);
    if (io.run_dir) {
      save_softlabels_csv(soft_labels,
                          *io.run_dir / ("softlabels_epoch_" + std::to_string(t) + ".csv"));
      if ((config.checkpoint_every > 0 && (t + 1) % config.checkpoint_every == 0) ||
          t == config.epochs - 1)
        save_checkpoint(*io.run_dir / ("checkpoint_" + std::to_string(t) + ".bin"),
                        last_good);
      jsonl << to_jsonl_line(log) << "\n";
      jsonl.flush();
    }
    result.logs.push_back(log);
  }

  result.params = std::move(params);
  result.soft_labels = std::move(soft_labels);

  if (io.run_dir) {
    const double total_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - run_start)
                                .count();
    json fm;
    fm["tool_version"] = kVersion;
    fm["epochs_completed"] = start_epoch + static_cast<int>(result.logs.size());
    double final_aca = std::numeric_limits<double>::quiet_NaN();
    double best_aca = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> acas;
    for (const EpochLog& l : result.logs)
      if (!std::isnan(l.test_aca)) acas.push_back(l.test_aca);
    if (!acas.empty()) {
      final_aca = acas.back();
      best_aca = *std::max_element(acas.begin(), acas.end());
    }
    fm["final_test_aca"] = num_or_null(final_aca);
    fm["best_test_aca"] = num_or_null(best_aca);
    if (!acas.empty()) {
      const int k = std::min<std::size_t>(10, acas.size());
      double s = 0;
      for (int i = 0; i < k; ++i) s += acas[acas.size() - 1 - i];
      fm["last10_mean_test_aca"] = s / k;
    } else {
      fm["last10_mean_test_aca"] = nullptr;
    }
    if (!result.logs.empty()) {
      const EpochLog& last = result.logs.back();
      fm["final_total_loss"] = last.total;
      fm["final_counts"] = {{"clean", last.counts.clean},
                            {"relabeled", last.counts.relabeled},
                            {"discarded", last.counts.discarded}};
      if (last.selection.available) {
        fm["final_selection"] = json::parse(to_jsonl_line(last))["selection"];
      }
    }
    fm["wall_ms"] = total_ms;
    std::ofstream out(*io.run_dir / "final_metrics.json");
    out << fm.dump(2) << "\n";
  }
  return result;
}

}  // namespace grip
