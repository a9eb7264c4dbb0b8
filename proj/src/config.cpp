#include "grip/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace grip {
namespace {

using json = nlohmann::ordered_json;

int parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  }
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  }
}

std::uint64_t parse_seed(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                      s + "'");
  }
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;

// Single source of truth for the flat key space used by --set, env
// overrides, and the JSON schema.
const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"epochs", [](TrainConfig& c, const std::string& v) { c.epochs = parse_int("epochs", v); }},
      {"warmup", [](TrainConfig& c, const std::string& v) { c.warmup = parse_int("warmup", v); }},
      {"ema_momentum", [](TrainConfig& c, const std::string& v) { c.ema_momentum = parse_double("ema_momentum", v); }},
      {"w", [](TrainConfig& c, const std::string& v) { c.w = parse_double("w", v); }},
      {"gamma", [](TrainConfig& c, const std::string& v) { c.gamma = parse_double("gamma", v); }},
      {"alpha.start", [](TrainConfig& c, const std::string& v) { c.alpha.start = parse_double("alpha.start", v); }},
      {"alpha.end", [](TrainConfig& c, const std::string& v) { c.alpha.end = parse_double("alpha.end", v); }},
      {"alpha.ramp_epochs", [](TrainConfig& c, const std::string& v) { c.alpha.ramp_epochs = parse_int("alpha.ramp_epochs", v); }},
      {"tau", [](TrainConfig& c, const std::string& v) { c.tau = parse_double("tau", v); }},
      {"batch_size", [](TrainConfig& c, const std::string& v) { c.batch_size = parse_int("batch_size", v); }},
      {"lr", [](TrainConfig& c, const std::string& v) { c.lr = parse_double("lr", v); }},
      {"lr_decay_every", [](TrainConfig& c, const std::string& v) { c.lr_decay_every = parse_int("lr_decay_every", v); }},
      {"lr_decay_factor", [](TrainConfig& c, const std::string& v) { c.lr_decay_factor = parse_double("lr_decay_factor", v); }},
      {"sgd_momentum", [](TrainConfig& c, const std::string& v) { c.sgd_momentum = parse_double("sgd_momentum", v); }},
      {"weight_decay", [](TrainConfig& c, const std::string& v) { c.weight_decay = parse_double("weight_decay", v); }},
      {"seed", [](TrainConfig& c, const std::string& v) { c.seed = parse_seed("seed", v); }},
      {"arch",
       [](TrainConfig& c, const std::string& v) {
         try {
           c.arch = architecture_from_string(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("config key 'arch': ") + e.what());
         }
       }},
      {"hidden", [](TrainConfig& c, const std::string& v) { c.hidden = parse_int("hidden", v); }},
      {"eval_every", [](TrainConfig& c, const std::string& v) { c.eval_every = parse_int("eval_every", v); }},
      {"checkpoint_every", [](TrainConfig& c, const std::string& v) { c.checkpoint_every = parse_int("checkpoint_every", v); }},
      {"threads", [](TrainConfig& c, const std::string& v) { c.threads = parse_int("threads", v); }},
  };
  return table;
}

void apply_one(TrainConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void validated(const TrainConfig& config) {
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string env_name_for(const std::string& key) {
  std::string name = "GRIP_";
  for (char ch : key) {
    if (ch == '.')
      name += "__";
    else
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return name;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"cifar-like", "webfg-like", "ce-baseline"};
}

TrainConfig preset_config(const std::string& name) {
  TrainConfig c;  // struct defaults double as the webfg-like regime minus tau
  if (name == "cifar-like") {
    c.warmup = 10;
    c.gamma = 1.0;
    c.alpha = {1.0, 0.2, 5};
    c.tau = 0.03;
  } else if (name == "webfg-like") {
    c.warmup = 5;
    c.gamma = 0.5;
    c.alpha = {0.5, 0.5, 0};
    c.tau = 0.04;
  } else if (name == "ce-baseline") {
    c.w = 0.0;
    c.gamma = 0.0;
    c.warmup = 1000000;  // purification never activates
  } else {
    throw ConfigError("unknown preset '" + name +
                      "'; available: cifar-like, webfg-like, ce-baseline");
  }
  return c;
}

std::string config_to_json(const TrainConfig& config) {
  json j;
  j["epochs"] = config.epochs;
  j["warmup"] = config.warmup;
  j["ema_momentum"] = config.ema_momentum;
  j["w"] = config.w;
  j["gamma"] = config.gamma;
  j["alpha"] = {{"start", config.alpha.start},
                {"end", config.alpha.end},
                {"ramp_epochs", config.alpha.ramp_epochs}};
  j["tau"] = config.tau;
  j["batch_size"] = config.batch_size;
  j["lr"] = config.lr;
  j["lr_decay_every"] = config.lr_decay_every;
  j["lr_decay_factor"] = config.lr_decay_factor;
  j["sgd_momentum"] = config.sgd_momentum;
  j["weight_decay"] = config.weight_decay;
  j["seed"] = config.seed;
  j["arch"] = to_string(config.arch);
  j["hidden"] = config.hidden;
  j["eval_every"] = config.eval_every;
  j["checkpoint_every"] = config.checkpoint_every;
  j["threads"] = config.threads;
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& json_text, const TrainConfig& base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  std::vector<std::string> known_flat;
  for (const auto& [name, setter] : setters()) known_flat.push_back(name);

  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha") {
      if (!value.is_object()) throw ConfigError("config key 'alpha' must be an object");
      for (const auto& [sub, sub_value] : value.items()) {
        (void)sub_value;
        const std::string flat = "alpha." + sub;
        if (std::find(known_flat.begin(), known_flat.end(), flat) == known_flat.end())
          unknown.push_back(flat);
      }
      continue;
    }
    if (std::find(known_flat.begin(), known_flat.end(), key) == known_flat.end())
      unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const std::string& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  TrainConfig c = base;
  try {
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("warmup")) c.warmup = j["warmup"].get<int>();
    if (j.contains("ema_momentum")) c.ema_momentum = j["ema_momentum"].get<double>();
    if (j.contains("w")) c.w = j["w"].get<double>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("alpha")) {
      const json& a = j["alpha"];
      if (a.contains("start")) c.alpha.start = a["start"].get<double>();
      if (a.contains("end")) c.alpha.end = a["end"].get<double>();
      if (a.contains("ramp_epochs")) c.alpha.ramp_epochs = a["ramp_epochs"].get<int>();
    }
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("lr_decay_every")) c.lr_decay_every = j["lr_decay_every"].get<int>();
    if (j.contains("lr_decay_factor"))
      c.lr_decay_factor = j["lr_decay_factor"].get<double>();
    if (j.contains("sgd_momentum")) c.sgd_momentum = j["sgd_momentum"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("arch"))
      c.arch = architecture_from_string(j["arch"].get<std::string>());
    if (j.contains("hidden")) c.hidden = j["hidden"].get<int>();
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<int>();
    if (j.contains("checkpoint_every"))
      c.checkpoint_every = j["checkpoint_every"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  validated(c);
  return c;
}

TrainConfig load_config_file(const std::filesystem::path& path,
                             const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str(), base);
}

void save_config_file(const std::filesystem::path& path, const TrainConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path.string());
  out << config_to_json(config) << "\n";
}

TrainConfig apply_overrides(TrainConfig base,
                            const std::vector<std::string>& key_value_pairs) {
  for (const std::string& kv : key_value_pairs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like key=value, got '" + kv + "'");
    apply_one(base, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validated(base);
  return base;
}

std::vector<std::string> env_overrides(TrainConfig& config) {
  std::vector<std::string> applied;
  for (const auto& [key, setter] : setters()) {
    const char* value = std::getenv(env_name_for(key).c_str());
    if (!value) continue;
    setter(config, value);
    applied.push_back(key + "=" + value);
  }
  if (!applied.empty()) validated(config);
  return applied;
}

}  // namespace grip
