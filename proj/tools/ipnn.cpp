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

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "ipnn/harness/runs.hpp"

namespace {

using namespace ipnn;

harness::ExperimentConfig resolve(const std::string& path, const std::optional<std::uint64_t>& seed,
                                  const std::optional<std::string>& out, const std::vector<std::string>& sets) {
  harness::ExperimentConfig cfg = path.empty() ? harness::ExperimentConfig{} : harness::load_config(path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw harness::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    harness::set_key(cfg, harness::detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  harness::finalize(cfg);
  return cfg;
}

void print_summary(const harness::RunSummary& s) {
  std::cout << s.run_id << ": steps " << s.steps << ", last-epoch loss " << s.last_epoch_loss << ", train acc "
            << s.train_acc;
  if (s.eval_acc) std::cout << ", eval acc " << *s.eval_acc;
  std::cout << ", supported points " << s.supported_points << ", pure fraction " << s.pure_fraction << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indeterminate probability neural network experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;
  bool quiet = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "override the output directory");
    sub->add_option("--set", sets, "override any config key, KEY=VALUE (repeatable)");
    sub->add_flag("--quiet", quiet, "no progress lines");
  };

  auto* train = app.add_subcommand("train", "train one configuration");
  common(train);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with frozen statistics");
  common(eval);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint.bin from train")->required();

  auto* sweep = app.add_subcommand("sweep", "train once per value of one config key");
  common(sweep);
  std::string axis;
  sweep->add_option("--axis", axis, "KEY=v1,v2,... (split values use x: 2x5)")->required();

  auto* cluster = app.add_subcommand("cluster", "unsupervised clustering over several rounds");
  common(cluster);
  std::size_t rounds = 10;
  cluster->add_option("--rounds", rounds, "number of independently seeded rounds");

  app.add_subcommand("cointoss", "print the coin game tables as exact fractions");

  CLI11_PARSE(app, argc, argv);

  try {
    harness::TrainOptions opt;
    opt.log = quiet ? nullptr : &std::cerr;
    if (*train) {
      print_summary(harness::run_train(resolve(config_path, seed, out, sets), opt));
    } else if (*eval) {
      const std::optional<harness::ExperimentConfig> cfg =
          config_path.empty() && sets.empty() ? std::nullopt
                                              : std::optional(resolve(config_path, seed, out, sets));
      harness::ExperimentConfig data_cfg = cfg ? *cfg : harness::load_checkpoint(checkpoint).config;
      if (data_cfg.eval_split == "none") data_cfg.eval_split = "train";
      const harness::Datasets data = harness::load_datasets(data_cfg);
      const auto r = harness::run_eval(checkpoint, data.eval ? *data.eval : data.train, cfg);
      std::cout << "accuracy " << r.result.accuracy << "\nloss " << r.result.loss << "\nsupported_points "
                << r.audit.supported_points << "\npure_fraction " << r.audit.pure_fraction() << "\ncapacity_ok "
                << (r.audit.capacity_ok ? "yes" : "no") << '\n';
    } else if (*sweep) {
      for (const auto& s : harness::run_sweep(resolve(config_path, seed, out, sets), harness::parse_axis(axis), opt))
        print_summary(s);
    } else if (*cluster) {
      const auto cfg = resolve(config_path, seed, out, sets);
      const auto aligned = harness::run_cluster(cfg, rounds, opt);
      eval::write_cluster_csv(std::cout, aligned);
    } else {
      harness::run_cointoss(std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
