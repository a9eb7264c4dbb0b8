#include "grip/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace grip {
namespace {

using json = nlohmann::ordered_json;

std::vector<double> acas_of(const std::vector<EpochLog>& logs) {
  std::vector<double> acas;
  for (const EpochLog& l : logs)
    if (!std::isnan(l.test_aca)) acas.push_back(l.test_aca);
  return acas;
}

const EpochLog* last_purify_epoch(const std::vector<EpochLog>& logs) {
  for (auto it = logs.rbegin(); it != logs.rend(); ++it)
    if (it->purify_active) return &*it;
  return nullptr;
}

double last_k_mean(const std::vector<double>& v, int k) {
  const int n = std::min<int>(k, static_cast<int>(v.size()));
  double s = 0;
  for (int i = 0; i < n; ++i) s += v[v.size() - 1 - i];
  return s / n;
}

json summary_json(const std::vector<EpochLog>& logs) {
  json j;
  j["epochs"] = static_cast<int>(logs.size());
  const auto acas = acas_of(logs);
  if (!acas.empty()) {
    j["final_test_aca"] = acas.back();
    j["best_test_aca"] = *std::max_element(acas.begin(), acas.end());
    j["last10_mean_test_aca"] = last_k_mean(acas, 10);
  } else {
    j["final_test_aca"] = nullptr;
    j["best_test_aca"] = nullptr;
    j["last10_mean_test_aca"] = nullptr;
  }
  if (!logs.empty()) {
    j["first_total_loss"] = logs.front().total;
    j["final_total_loss"] = logs.back().total;
  }
  const EpochLog* p = last_purify_epoch(logs);
  if (p) {
    json purify;
    purify["epoch"] = p->epoch;
    purify["thr"] = p->thr;
    purify["counts"] = {{"clean", p->counts.clean},
                        {"relabeled", p->counts.relabeled},
                        {"discarded", p->counts.discarded}};
    if (p->selection.available) {
      json sel = json::parse(to_jsonl_line(*p))["selection"];
      purify["selection"] = sel;
    }
    j["purification"] = purify;
  } else {
    j["purification"] = nullptr;  // never active in this run
  }
  return j;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::vector<EpochLog> load_epoch_logs(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "epochs.jsonl";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing run artifact: " + path.string());
  std::vector<EpochLog> logs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    logs.push_back(epoch_log_from_json_line(line));
  }
  if (logs.empty()) throw std::runtime_error("empty epochs.jsonl: " + path.string());
  return logs;
}

std::string render_report(const std::vector<EpochLog>& logs) {
  std::ostringstream out;
  out << "epochs: " << logs.size() << "\n";
  const auto acas = acas_of(logs);
  if (!acas.empty()) {
    out << "final test ACA: " << fmt3(acas.back()) << "\n";
    out << "best test ACA: " << fmt3(*std::max_element(acas.begin(), acas.end()))
        << "\n";
    out << "last-10 mean ACA: " << fmt3(last_k_mean(acas, 10)) << "\n";
  } else {
    out << "test ACA: not evaluated\n";
  }
  if (!logs.empty())
    out << "total loss: " << fmt3(logs.front().total) << " -> "
        << fmt3(logs.back().total) << "\n";
  const EpochLog* p = last_purify_epoch(logs);
  if (p) {
    out << "purification (epoch " << p->epoch << "): clean " << p->counts.clean
        << ", relabeled " << p->counts.relabeled << ", discarded "
        << p->counts.discarded << ", thr " << fmt3(p->thr) << "\n";
    if (p->selection.available && p->selection.f1)
      out << "noisy-detection F1: " << fmt3(*p->selection.f1) << "\n";
    if (p->selection.available && p->selection.relabel_accuracy)
      out << "relabel accuracy: " << fmt3(*p->selection.relabel_accuracy) << "\n";
  } else {
    out << "purification: never active\n";
  }
  return out.str();
}

std::string render_report_json(const std::vector<EpochLog>& logs) {
  return summary_json(logs).dump(2);
}

}  // namespace grip
