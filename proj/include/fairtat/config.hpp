#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairtat/data.hpp"
#include "fairtat/trainer.hpp"

namespace fairtat {

struct DatasetConfig {
  std::string kind = "three_class";  // three_class | blobs | cifar10
  std::uint64_t seed = 1;
  // three_class / blobs
  std::size_t n_per_class = 200;
  double separation_hard = 1.0;
  double separation_easy = 4.0;
  double noise_std = 1.0;
  // blobs
  int num_classes = 10;
  std::size_t dim = 32;
  double center_spread = 1.0;
  // cifar10
  std::string path;
  std::size_t subset_per_class = 0;
};

struct EvalConfig {
  std::vector<double> epsilons;  // must be explicit for evaluation sweeps
  std::size_t num_steps = 10;
  double step_size = 2.0 / 255.0;
  std::vector<CorruptionKind> corruptions;
  std::vector<int> severities = {1, 2, 3, 4, 5};
};

/// Parsed `section.key = value` experiment description.
struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds = {0};

  // Full key -> value map with defaults filled in; echoed into reports.
  std::map<std::string, std::string> resolved() const;

  void validate() const;

  // Throws std::runtime_error with a line/field diagnostic on bad input.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig parse_file(const std::string& path);
  // Applies one `section.key=value` override (CLI flags beat file values).
  void set(const std::string& key, const std::string& value);
};

// Builds the dataset named by the config (generator or CIFAR-10 ingestion).
Dataset build_dataset(const DatasetConfig& config);
// Held-out evaluation data: a fresh draw for generators, the loaded data for
// CIFAR-10.
Dataset build_eval_dataset(const DatasetConfig& config);

// Parses "8/255" style fractions as well as plain decimals.
double parse_value_or_fraction(const std::string& s);

}  // namespace fairtat
