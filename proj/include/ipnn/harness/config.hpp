// Copyright 2026 The ipnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipnn/head/split_shape.hpp"

namespace ipnn::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Auxiliary classification task: a sub-joint space over `variables` trained
/// against the dataset's sub-label sequence `source` (e.g. "bit3").
struct SubTaskSpec {
  std::vector<std::size_t> variables;
  std::string source;
  friend bool operator==(const SubTaskSpec&, const SubTaskSpec&) = default;
};

/// One training/evaluation run. Every key of the flat config file maps to one
/// field here; unknown keys are rejected.
struct ExperimentConfig {
  std::string run_id = "run";
  std::string dataset = "mnist";  // mnist | binary_decimal
  std::string data_dir;           // mnist only; falls back to IPNN_DATA_DIR
  std::size_t train_limit = 0;    // 0 = whole split
  std::size_t test_limit = 0;
  std::size_t bits = 12;
  head::SplitShape split{{10}};
  std::vector<std::size_t> hidden{128};
  std::size_t batch_size = 64;
  std::size_t forget_T = 5;
  double epsilon = 1e-6;
  double learning_rate = 0.1;
  std::size_t epochs = 1;
  double init_lo = -0.3;
  double init_hi = 0.3;
  std::uint64_t seed = 0;
  std::string sub_tasks_text = "none";
  std::vector<SubTaskSpec> sub_tasks;
  double independence_weight = 0.0;
  std::string optimizer = "sgd";
  double momentum = 0.9;
  bool shuffle = true;
  std::size_t accuracy_every = 1;  // log batch accuracy every n steps (0 = never)
  std::string checkpoint = "full";  // full | stats | none
  std::string eval_split = "test";  // test | train | none
  std::size_t cluster_variable = 0;
  double loss_threshold = 0.0;      // steps-to-threshold target for the summary (0 = off)
  std::string output_dir = "out";

  void validate() const;
  std::string to_text() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

/// "2,10" or "2x10".
inline std::vector<std::size_t> parse_size_list(const std::string& key, std::string v) {
  for (char& c : v)
    if (c == 'x' || c == 'X') c = ',';
  std::vector<std::size_t> out;
  for (const auto& part : split_on(v, ',')) {
    if (part.empty()) continue;
    out.push_back(parse_size(key, part));
  }
  return out;
}

inline std::string join(const std::vector<std::size_t>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

inline std::string format_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace detail

/// Parses "none", "per_bit" (variable i against bit i), or an explicit list
/// "0@bit0;1+2@bit1" of variables (joined by '+') and a sub-label source.
inline std::vector<SubTaskSpec> parse_sub_tasks(const std::string& text, const head::SplitShape& split) {
  std::vector<SubTaskSpec> out;
  if (text.empty() || text == "none") return out;
  if (text == "per_bit") {
    for (std::size_t j = 0; j < split.variables(); ++j) out.push_back({{j}, "bit" + std::to_string(j)});
    return out;
  }
  for (const auto& entry : detail::split_on(text, ';')) {
    if (entry.empty()) continue;
    const auto at = entry.find('@');
    if (at == std::string::npos) throw ConfigError("sub_tasks: entry '" + entry + "' lacks '@source'");
    SubTaskSpec spec;
    for (const auto& v : detail::split_on(entry.substr(0, at), '+')) {
      const std::size_t var = detail::parse_size("sub_tasks", v);
      if (var >= split.variables()) throw ConfigError("sub_tasks: variable " + v + " out of range");
      spec.variables.push_back(var);
    }
    spec.source = detail::trim(entry.substr(at + 1));
    if (spec.variables.empty() || spec.source.empty()) throw ConfigError("sub_tasks: malformed entry '" + entry + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

/// Applies one key=value assignment.
inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "run_id") c.run_id = v;
  else if (key == "dataset") c.dataset = v;
  else if (key == "data_dir") c.data_dir = v;
  else if (key == "train_limit") c.train_limit = parse_size(key, v);
  else if (key == "test_limit") c.test_limit = parse_size(key, v);
  else if (key == "bits") c.bits = parse_size(key, v);
  else if (key == "split") {
    try {
      c.split = head::SplitShape(parse_size_list(key, v));
    } catch (const head::ContractError& e) {
      throw ConfigError(std::string("split: ") + e.what());
    }
  } else if (key == "hidden") c.hidden = (v == "none" || v.empty()) ? std::vector<std::size_t>{} : parse_size_list(key, v);
  else if (key == "batch_size") c.batch_size = parse_size(key, v);
  else if (key == "forget_T") c.forget_T = parse_size(key, v);
  else if (key == "epsilon") c.epsilon = parse_double(key, v);
  else if (key == "learning_rate") c.learning_rate = parse_double(key, v);
  else if (key == "epochs") c.epochs = parse_size(key, v);
  else if (key == "init_range") {
    const auto parts = split_on(v, ',');
    if (parts.size() == 1) {
      const double r = parse_double(key, parts[0]);
      c.init_lo = -r;
      c.init_hi = r;
    } else if (parts.size() == 2) {
      c.init_lo = parse_double(key, parts[0]);
      c.init_hi = parse_double(key, parts[1]);
    } else {
      throw ConfigError("init_range: expected 'r' or 'lo,hi'");
    }
  } else if (key == "seed") c.seed = parse_size(key, v);
  else if (key == "sub_tasks") c.sub_tasks_text = v;
  else if (key == "independence_weight") c.independence_weight = parse_double(key, v);
  else if (key == "optimizer") c.optimizer = v;
  else if (key == "momentum") c.momentum = parse_double(key, v);
  else if (key == "shuffle") c.shuffle = parse_bool(key, v);
  else if (key == "accuracy_every") c.accuracy_every = parse_size(key, v);
  else if (key == "checkpoint") c.checkpoint = v;
  else if (key == "eval_split") c.eval_split = v;
  else if (key == "cluster_variable") c.cluster_variable = parse_size(key, v);
  else if (key == "loss_threshold") c.loss_threshold = parse_double(key, v);
  else if (key == "output_dir") c.output_dir = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Re-derives fields that depend on other keys (sub-task list depends on the
/// split) and checks every constraint.
inline void finalize(ExperimentConfig& c) {
  c.sub_tasks = parse_sub_tasks(c.sub_tasks_text, c.split);
  c.validate();
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  ExperimentConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set_key(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  finalize(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, path);
}

inline void ExperimentConfig::validate() const {
  if (dataset != "mnist" && dataset != "binary_decimal") throw ConfigError("dataset must be mnist or binary_decimal");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (forget_T < 1) throw ConfigError("forget_T must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(init_lo < init_hi)) throw ConfigError("init_range requires lo < hi");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(loss_threshold >= 0.0)) throw ConfigError("loss_threshold must be >= 0");
  if (optimizer != "sgd" && optimizer != "momentum") throw ConfigError("optimizer must be sgd or momentum");
  if (checkpoint != "full" && checkpoint != "stats" && checkpoint != "none") {
    throw ConfigError("checkpoint must be full, stats or none");
  }
  if (eval_split != "test" && eval_split != "train" && eval_split != "none") {
    throw ConfigError("eval_split must be test, train or none");
  }
  if (cluster_variable >= split.variables()) throw ConfigError("cluster_variable out of range");
  if (dataset == "binary_decimal" && (bits < 1 || bits > 20)) throw ConfigError("bits must be in [1, 20]");
  if (split.joint_points() == 0) throw ConfigError("split is empty");
}

/// Resolved configuration in the file format, one key per line in a fixed
/// order; parse_config_text(to_text()) reproduces the config.
inline std::string ExperimentConfig::to_text() const {
  using detail::format_double;
  std::ostringstream os;
  os << "run_id = " << run_id << '\n'
     << "dataset = " << dataset << '\n'
     << "data_dir = " << data_dir << '\n'
     << "train_limit = " << train_limit << '\n'
     << "test_limit = " << test_limit << '\n'
     << "bits = " << bits << '\n'
     << "split = " << detail::join(split.sizes(), ",") << '\n'
     << "hidden = " << (hidden.empty() ? std::string("none") : detail::join(hidden, ",")) << '\n'
     << "batch_size = " << batch_size << '\n'
     << "forget_T = " << forget_T << '\n'
     << "epsilon = " << format_double(epsilon) << '\n'
     << "learning_rate = " << format_double(learning_rate) << '\n'
     << "epochs = " << epochs << '\n'
     << "init_range = " << format_double(init_lo) << "," << format_double(init_hi) << '\n'
     << "seed = " << seed << '\n'
     << "sub_tasks = " << sub_tasks_text << '\n'
     << "independence_weight = " << format_double(independence_weight) << '\n'
     << "optimizer = " << optimizer << '\n'
     << "momentum = " << format_double(momentum) << '\n'
     << "shuffle = " << (shuffle ? "true" : "false") << '\n'
     << "accuracy_every = " << accuracy_every << '\n'
     << "checkpoint = " << checkpoint << '\n'
     << "eval_split = " << eval_split << '\n'
     << "cluster_variable = " << cluster_variable << '\n'
     << "loss_threshold = " << format_double(loss_threshold) << '\n'
     << "output_dir = " << output_dir << '\n';
  return os.str();
}

/// Directory holding MNIST IDX files: config value, else IPNN_DATA_DIR.
inline std::string resolve_data_dir(const ExperimentConfig& c) {
  if (!c.data_dir.empty()) return c.data_dir;
  if (const char* env = std::getenv("IPNN_DATA_DIR"); env && *env) return env;
  throw ConfigError("mnist dataset needs data_dir or the IPNN_DATA_DIR environment variable");
}

}  // namespace ipnn::harness
