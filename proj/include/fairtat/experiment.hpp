#pragma once

#include <string>

#include <json.hpp>

#include "fairtat/config.hpp"
#include "fairtat/metrics.hpp"

namespace fairtat {

// Fig.-1-style bar data: CSV `class,cfps`, one row per class id.
std::string report_cfps_bars(const PredLog& log);

// Clean / attacked / corrupted evaluation of one parameter set against the
// config's evaluation block.
nlohmann::ordered_json evaluate_model(const ModelParams& params,
                                      const Dataset& eval_data,
                                      const ExperimentConfig& config,
                                      const std::string& model_tag);

// Executes every seed: train, checkpoint, evaluate; writes report.json,
// timings.json, per_class.csv, cfps.csv, corruption.csv and checkpoints into
// config.output_dir. Returns the report document.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config);

// Re-derives every number in a report from its echoed config and checkpoint
// files. Returns a human-readable failure description, or empty on success.
std::string verify_report(const std::string& report_path, double tol = 1e-9);

// `eval` subcommand body: evaluate one checkpoint under a config's
// evaluation block.
nlohmann::ordered_json evaluate_checkpoint(const std::string& checkpoint_path,
                                           const ExperimentConfig& config);

}  // namespace fairtat
