#include "grip/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "grip/config.hpp"
#include "grip/dataset.hpp"
#include "grip/report.hpp"
#include "grip/trainer.hpp"
#include "grip/version.hpp"

namespace grip {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

bool looks_like_csv(const fs::path& p) { return p.extension() == ".csv"; }

fs::path resolve_dataset_out(const fs::path& out) {
  return looks_like_csv(out) ? out : out / "data.csv";
}

fs::path resolve_dataset_in(const fs::path& in) {
  if (looks_like_csv(in)) return in;
  return in / "data.csv";
}

void refuse_existing(const fs::path& file, bool force) {
  if (!force && fs::exists(file))
    throw ConfigError("output " + file.string() +
                      " already exists; pass --force to overwrite");
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct GenDataArgs {
  int classes = 10;
  int per_class = 500;
  int dim = 8;
  double sep = 8.0;
  std::uint64_t seed = 1;
  std::string out;
  double test_fraction = 0.0;
  std::string test_out;
  bool force = false;
};

void cmd_gen_data(const GenDataArgs& a) {
  if ((a.test_fraction > 0.0) != !a.test_out.empty())
    throw ConfigError("--test-fraction and --test-out must be given together");
  if (a.test_fraction < 0.0 || a.test_fraction >= 1.0)
    throw ConfigError("--test-fraction must be in [0, 1)");

  const fs::path out = resolve_dataset_out(a.out);
  refuse_existing(out, a.force);
  const Dataset d = generate_blobs(a.classes, a.per_class, a.dim, a.sep, a.seed);
  json meta;
  meta["generator"] = "blobs";
  meta["classes"] = a.classes;
  meta["per_class"] = a.per_class;
  meta["dim"] = a.dim;
  meta["separation"] = a.sep;
  meta["seed"] = a.seed;

  if (a.test_fraction == 0.0) {
    save_csv(d, out, meta.dump());
    std::cout << "wrote " << d.size() << " samples to " << out.string() << "\n";
    return;
  }

  // Held-out split from the same clusters; two files with disjoint ids.
  const fs::path test_out = resolve_dataset_out(a.test_out);
  refuse_existing(test_out, a.force);
  const auto [train_part, test_part] = split(d, a.test_fraction, a.seed);
  meta["test_fraction"] = a.test_fraction;
  json train_meta = meta, test_meta = meta;
  train_meta["split"] = "train";
  test_meta["split"] = "test";
  save_csv(train_part, out, train_meta.dump());
  save_csv(test_part, test_out, test_meta.dump());
  std::cout << "wrote " << train_part.size() << " samples to " << out.string()
            << " and " << test_part.size() << " to " << test_out.string() << "\n";
}

struct InjectArgs {
  std::string in;
  std::string kind = "symmetric";
  double ratio = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  bool force = false;
};

void cmd_inject_noise(const InjectArgs& a) {
  if (a.ratio < 0.0 || a.ratio >= 1.0)
    throw ConfigError("--ratio must be in [0, 1)");
  const fs::path out = resolve_dataset_out(a.out);
  refuse_existing(out, a.force);

  const Dataset clean = load_csv(resolve_dataset_in(a.in));
  NoiseSpec spec;
  spec.kind = noise_kind_from_string(a.kind);
  spec.ratio = a.ratio;
  spec.seed = a.seed;
  const Dataset noisy = inject_noise(clean, spec);

  int flipped = 0;
  for (const Sample& s : noisy.samples)
    if (s.origin == Origin::flipped) ++flipped;

  json meta;
  meta["noise"] = {{"kind", a.kind},
                   {"ratio", a.ratio},
                   {"seed", a.seed},
                   {"realized_flips", flipped}};
  save_csv(noisy, out, meta.dump());
  std::cout << "wrote " << noisy.size() << " samples (" << flipped
            << " labels flipped) to " << out.string() << "\n";
}

struct TrainArgs {
  std::string data;
  std::string test;
  std::string preset;
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;
  std::string resume;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool force = false;
};

void cmd_train(const TrainArgs& a) {
  TrainConfig config = a.preset.empty() ? TrainConfig{} : preset_config(a.preset);
  if (!a.config_file.empty()) config = load_config_file(a.config_file, config);
  const auto env_applied = env_overrides(config);
  config = apply_overrides(config, a.sets);
  if (a.seed_given) config.seed = a.seed;
  if (a.threads > 0) config.threads = a.threads;
  config.validate();

  const fs::path run_dir = a.out;
  if (a.resume.empty()) refuse_existing(run_dir / "epochs.jsonl", a.force);
  fs::create_directories(run_dir);

  const Dataset train_set = load_csv(resolve_dataset_in(a.data));
  Dataset test_set;
  if (!a.test.empty()) test_set = load_csv(resolve_dataset_in(a.test));

  json manifest;
  manifest["command"] = "train";
  manifest["tool_version"] = kVersion;
  manifest["timestamp"] = utc_timestamp();
  manifest["data"] = a.data;
  manifest["test"] = a.test;
  manifest["resume"] = a.resume;
  manifest["seed"] = config.seed;
  manifest["env_overrides"] = env_applied;
  manifest["config"] = json::parse(config_to_json(config));
  {
    std::ofstream out(run_dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << manifest.dump(2) << "\n";
  }

  TrainIO io;
  io.run_dir = run_dir;
  if (!a.resume.empty()) io.resume_from = fs::path(a.resume);

  const TrainResult result = train(config, train_set, test_set, io);
  const EpochLog& last = result.logs.back();
  std::cout << "run complete: " << run_dir.string() << " epochs="
            << (last.epoch + 1);
  if (!std::isnan(last.test_aca)) std::cout << " final_test_aca=" << last.test_aca;
  std::cout << "\n";
}

struct EvalArgs {
  std::string params_json;
  std::string checkpoint;
  std::string data;
};

void cmd_eval(const EvalArgs& a) {
  if (a.params_json.empty() == a.checkpoint.empty())
    throw ConfigError("eval needs exactly one of --params or --checkpoint");
  const ClassifierParams params = a.checkpoint.empty()
                                      ? load_params_json(a.params_json)
                                      : load_checkpoint(a.checkpoint).params;
  const Dataset data = load_csv(resolve_dataset_in(a.data));
  json out;
  out["aca"] = evaluate(params, data);
  out["samples"] = data.size();
  std::cout << out.dump() << "\n";
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
  std::string format = "text";
};

std::vector<int> purify_epochs_in(const fs::path& run_dir) {
  std::vector<int> epochs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("purify_epoch_", 0) == 0 && entry.path().extension() == ".csv")
      epochs.push_back(std::stoi(name.substr(13)));
  }
  std::sort(epochs.begin(), epochs.end());
  return epochs;
}

void write_accuracy_curve(const fs::path& path, const std::vector<EpochLog>& logs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,test_aca,total,ce,soft,me,me_discard,clean,relabeled,discarded\n";
  char buf[160];
  for (const EpochLog& l : logs) {
    out << l.epoch << ',';
    if (std::isnan(l.test_aca))
      out << "";
    else {
      std::snprintf(buf, sizeof(buf), "%.17g", l.test_aca);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g,%.17g", l.total, l.ce,
                  l.soft, l.me, l.me_discard);
    out << buf << ',' << l.counts.clean << ',' << l.counts.relabeled << ','
        << l.counts.discarded << "\n";
  }
}

void write_d_histogram(const fs::path& purify_csv, const fs::path& out_path) {
  std::ifstream in(purify_csv);
  if (!in) throw std::runtime_error("missing run artifact: " + purify_csv.string());
  std::string line;
  std::getline(in, line);  // header
  constexpr int kBins = 20;
  int hist_clean[kBins] = {};
  int hist_flagged[kBins] = {};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id_field, d_field, dhat_field, dispo;
    std::getline(ss, id_field, ',');
    std::getline(ss, d_field, ',');
    std::getline(ss, dhat_field, ',');
    std::getline(ss, dispo, ',');
    const double d = std::stod(d_field);
    int bin = static_cast<int>(d * kBins);
    bin = std::min(std::max(bin, 0), kBins - 1);
    (dispo == "clean" ? hist_clean : hist_flagged)[bin]++;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << "bin_lo,bin_hi,selected_clean,flagged_noisy\n";
  for (int b = 0; b < kBins; ++b)
    out << static_cast<double>(b) / kBins << ',' << static_cast<double>(b + 1) / kBins
        << ',' << hist_clean[b] << ',' << hist_flagged[b] << "\n";
}

void cmd_report(const ReportArgs& a) {
  if (a.format != "text" && a.format != "json")
    throw ConfigError("--format must be text or json");

  std::vector<std::vector<EpochLog>> all_logs;
  for (const std::string& run : a.runs) all_logs.push_back(load_epoch_logs(run));

  if (!a.out.empty()) {
    const fs::path out_dir = a.out;
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
      const std::string prefix =
          a.runs.size() == 1 ? "" : "run" + std::to_string(i) + "_";
      {
        std::ofstream out(out_dir / (prefix + "summary.json"));
        out << render_report_json(all_logs[i]) << "\n";
      }
      write_accuracy_curve(out_dir / (prefix + "accuracy_curve.csv"), all_logs[i]);
      const fs::path run_dir = a.runs[i];
      for (int t : purify_epochs_in(run_dir))
        write_d_histogram(
            run_dir / ("purify_epoch_" + std::to_string(t) + ".csv"),
            out_dir / (prefix + "d_hist_epoch_" + std::to_string(t) + ".csv"));
      const auto purify_epochs = purify_epochs_in(run_dir);
      if (!purify_epochs.empty()) {
        const fs::path last_soft =
            run_dir /
            ("softlabels_epoch_" + std::to_string(purify_epochs.back()) + ".csv");
        if (fs::exists(last_soft))
          fs::copy_file(last_soft, out_dir / (prefix + "softlabel_heatmap.csv"),
                        fs::copy_options::overwrite_existing);
      }
    }
    if (a.runs.size() > 1) {
      std::ofstream out(out_dir / "comparison.csv");
      out << "run,final_test_aca,best_test_aca,last10_mean_test_aca,final_f1\n";
      for (std::size_t i = 0; i < a.runs.size(); ++i) {
        const json s = json::parse(render_report_json(all_logs[i]));
        auto cell = [&s](const char* key) -> std::string {
          if (!s.contains(key) || s[key].is_null()) return "";
          return s[key].dump();
        };
        std::string f1;
        if (!s["purification"].is_null() && s["purification"].contains("selection") &&
            !s["purification"]["selection"]["f1"].is_null())
          f1 = s["purification"]["selection"]["f1"].dump();
        out << a.runs[i] << ',' << cell("final_test_aca") << ','
            << cell("best_test_aca") << ',' << cell("last10_mean_test_aca") << ','
            << f1 << "\n";
      }
    }
    std::cout << "report written to " << out_dir.string() << "\n";
    return;
  }

  if (a.format == "json") {
    json combined = json::array();
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
      json entry;
      entry["run"] = a.runs[i];
      entry["summary"] = json::parse(render_report_json(all_logs[i]));
      combined.push_back(std::move(entry));
    }
    std::cout << combined.dump(2) << "\n";
    return;
  }

  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    if (a.runs.size() > 1) std::cout << "== " << a.runs[i] << " ==\n";
    std::cout << render_report(all_logs[i]);
  }
  if (a.runs.size() > 1) {
    std::cout << "run\tfinal_aca\tbest_aca\tlast10_mean\n";
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
      const json s = json::parse(render_report_json(all_logs[i]));
      auto cell = [&s](const char* key) -> std::string {
        return s[key].is_null() ? "-" : s[key].dump();
      };
      std::cout << a.runs[i] << '\t' << cell("final_test_aca") << '\t'
                << cell("best_test_aca") << '\t' << cell("last10_mean_test_aca")
                << "\n";
    }
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"GRIP: group-regularized instance purification for noisy labels"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a Gaussian-blob dataset");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes (>= 2)");
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per class");
  gen_cmd->add_option("--dim", gen.dim, "Feature dimension");
  gen_cmd->add_option("--sep", gen.sep, "Minimum distance between cluster means");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "Output CSV path or directory")->required();
  gen_cmd->add_option("--test-fraction", gen.test_fraction,
                      "Hold out this stratified fraction as a test set");
  gen_cmd->add_option("--test-out", gen.test_out, "Test-set CSV path or directory");
  gen_cmd->add_flag("--force", gen.force, "Overwrite existing output");

  InjectArgs inject;
  CLI::App* inject_cmd =
      app.add_subcommand("inject-noise", "Corrupt labels with a noise matrix");
  inject_cmd->add_option("--in", inject.in, "Clean dataset CSV or directory")
      ->required();
  inject_cmd->add_option("--kind", inject.kind, "symmetric or asymmetric");
  inject_cmd->add_option("--ratio", inject.ratio, "Noise ratio in [0, 1)");
  inject_cmd->add_option("--seed", inject.seed, "RNG seed");
  inject_cmd->add_option("--out", inject.out, "Output CSV path or directory")
      ->required();
  inject_cmd->add_flag("--force", inject.force, "Overwrite existing output");

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train with GRIP purification");
  train_cmd->add_option("--data", tr.data, "Training dataset CSV or directory")
      ->required();
  train_cmd->add_option("--test", tr.test, "Held-out test dataset");
  train_cmd->add_option("--preset", tr.preset,
                        "Config preset: cifar-like, webfg-like, ce-baseline");
  train_cmd->add_option("--config", tr.config_file, "JSON config file");
  train_cmd->add_option("--set", tr.sets, "Override a config key (key=value)");
  train_cmd->add_option("--out", tr.out, "Run directory")->required();
  train_cmd->add_option("--resume", tr.resume, "Checkpoint file to resume from");
  auto* seed_opt = train_cmd->add_option("--seed", tr.seed, "Override config seed");
  train_cmd->add_option("--threads", tr.threads, "Override config threads");
  train_cmd->add_flag("--force", tr.force, "Overwrite an existing run directory");

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate parameters on a dataset");
  eval_cmd->add_option("--params", ev.params_json, "Parameters JSON file");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Training checkpoint file");
  eval_cmd->add_option("--data", ev.data, "Dataset CSV or directory")->required();

  ReportArgs rep;
  CLI::App* report_cmd = app.add_subcommand("report", "Summarize one or more runs");
  report_cmd->add_option("--run", rep.runs, "Run directory (repeatable)")->required();
  report_cmd->add_option("--out", rep.out, "Write plot-ready tables to this directory");
  report_cmd->add_option("--format", rep.format, "Stdout format: text or json");

  try {
    app.parse(argc, argv);
    tr.seed_given = seed_opt->count() > 0;
    if (gen_cmd->parsed()) cmd_gen_data(gen);
    if (inject_cmd->parsed()) cmd_inject_noise(inject);
    if (train_cmd->parsed()) cmd_train(tr);
    if (eval_cmd->parsed()) cmd_eval(ev);
    if (report_cmd->parsed()) cmd_report(rep);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("grip");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace grip
