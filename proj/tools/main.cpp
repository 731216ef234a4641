// fairtat CLI: run / eval / verify.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairtat/experiment.hpp"

using fairtat::ExperimentConfig;

int main(int argc, char** argv) {
  CLI::App app{"FAIR-TAT experiment runner"};
  app.require_subcommand(1);

  std::string config_path, mode, checkpoint_path, report_path;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  bool dry_run = false;

  auto* run = app.add_subcommand("run", "Train and evaluate per the config");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--mode", mode, "override train.mode (fair_tat | untargeted_at)");
  run->add_option("--seed", seeds, "override run.seeds (repeatable)");
  run->add_option("--set", overrides, "extra section.key=value override (repeatable)");
  run->add_flag("--dry-run", dry_run, "validate and print resolved config, run nothing");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint under a config's eval block");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("config", config_path, "experiment config file")->required();

  auto* verify = app.add_subcommand("verify", "Recompute every number in a report");
  verify->add_option("report", report_path, "report.json path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig config = ExperimentConfig::parse_file(config_path);
      if (!mode.empty()) config.set("train.mode", mode);
      if (!seeds.empty()) config.seeds = seeds;
      for (const std::string& kv : overrides) {
        auto pos = kv.find('=');
        if (pos == std::string::npos) {
          throw std::runtime_error("--set expects section.key=value, got '" + kv + "'");
        }
        config.set(kv.substr(0, pos), kv.substr(pos + 1));
      }
      config.validate();
      if (dry_run) {
        for (const auto& [key, value] : config.resolved()) {
          std::printf("%s = %s\n", key.c_str(), value.c_str());
        }
        return 0;
      }
      fairtat::run_experiment(config);
      std::printf("wrote %s/report.json\n", config.output_dir.c_str());
      return 0;
    }
    if (eval->parsed()) {
      ExperimentConfig config = ExperimentConfig::parse_file(config_path);
      config.validate();
      auto result = fairtat::evaluate_checkpoint(checkpoint_path, config);
      std::cout << result.dump(2) << "\n";
      return 0;
    }
    // verify
    std::string failure = fairtat::verify_report(report_path);
    if (!failure.empty()) {
      std::fprintf(stderr, "verify failed: %s\n", failure.c_str());
      return 1;
    }
    std::printf("verify ok\n");
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
