#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairtat/attacks.hpp"
#include "fairtat/data.hpp"
#include "fairtat/metrics.hpp"
#include "fairtat/model.hpp"
#include "fairtat/sampler.hpp"

namespace fairtat {

enum class TrainMode { fair_tat, untargeted_at };
enum class LossKind { cross_entropy, trades };
enum class AveragingKind { none, ema, fawa };
enum class CfpsSource { adversarial, clean };
enum class EpsKeying { ground_truth, target };

struct AveragingConfig {
  AveragingKind kind = AveragingKind::none;
  double alpha = 0.999;
  // Epoch index at which averaging begins; kStartAtHalf means 50% of the
  // configured epochs.
  static constexpr std::size_t kStartAtHalf = static_cast<std::size_t>(-1);
  std::size_t start_epoch = kStartAtHalf;
  double fairness_threshold = 0.2;  // FAWA only

  std::size_t resolved_start(std::size_t total_epochs) const {
    return start_epoch == kStartAtHalf ? total_epochs / 2 : start_epoch;
  }
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::vector<std::size_t> hidden_dims = {64};
  SgdConfig sgd;
  // Base margin epsilon plus training-time PGD settings; random start is the
  // training-time default.
  AttackConfig attack = [] {
    AttackConfig a;
    a.random_start = true;
    return a;
  }();
  double lambda1 = 0.5;
  PriorKind prior_kind = PriorKind::cfps_prior;
  AveragingConfig averaging;
  LossKind loss_kind = LossKind::cross_entropy;
  double trades_beta = 2.0;
  TrainMode mode = TrainMode::fair_tat;
  std::uint64_t seed = 0;
  double valid_fraction = 0.02;
  // Prior refresh cadence: per-epoch by default, per-batch behind this flag.
  bool prior_per_batch = false;
  CfpsSource cfps_source = CfpsSource::adversarial;
  EpsKeying eps_keying = EpsKeying::ground_truth;
  bool verbose = false;

  void validate() const;
};

/// Per-class running state across epochs.
struct ClassStatsState {
  std::vector<double> r_k;      // robust training accuracy, last interval
  std::vector<double> cfps_k;   // false-positive scores, last interval
  std::vector<double> eps_k;    // calibrated margins
  TargetDistribution prior;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss_mean = 0.0;
  double clean_acc = 0.0;
  double robust_acc = 0.0;
  std::vector<double> clean_recall;
  std::vector<double> robust_recall;
  double worst_clean_recall = 0.0;
  double worst_robust_recall = 0.0;
  std::vector<double> cfps;
  std::vector<double> r_k;
  std::vector<double> eps_k;
  std::vector<double> prior;
  std::string averaging_event;  // "", "ema", "fawa_accept", "fawa_reject"
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  ModelParams final_model;
  ModelParams averaged_model;
  TrainHistory history;
};

// Stratified split: each class contributes ceil(valid_fraction * n_k)
// samples to the validation side. Throws naming any class with < 2 samples.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double valid_fraction,
                                          std::uint64_t seed);

// eps_k = (lambda1 + r_k) * eps, elementwise.
std::vector<double> update_epsilons(const std::vector<double>& r_k,
                                    double base_eps, double lambda1);

struct FawaDecision {
  bool accepted = false;
  double worst_class_robust = 0.0;
  double overall_robust = 0.0;
};

// Folds a checkpoint into the average only when its worst-class robust
// recall on the validation split clears threshold * overall robust accuracy.
FawaDecision fawa_gate(const ModelParams& checkpoint, const Dataset& valid,
                       const AttackConfig& attack, double threshold);

// One pass over the training split (Alg. 1 inner loop): target sampling,
// targeted (or untargeted) perturbation, SGD update, per-class stats refresh
// and epsilon calibration. Mutates model, sgd_state and stats.
EpochRecord train_epoch(ModelParams& model, const Dataset& train_data,
                        ClassStatsState& stats, const TrainConfig& config,
                        SgdState& sgd_state, std::size_t epoch);

// Full run: split -> epochs -> averaging schedule. Reproducible by seed.
TrainResult fair_tat_train(const TrainConfig& config, const Dataset& dataset);

// Deterministic per-(epoch, batch, channel) rng stream tags, shared with the
// equivalence-test oracles.
std::uint64_t stream_tag(std::size_t epoch, std::size_t batch,
                         std::uint64_t channel);
inline constexpr std::uint64_t kChannelShuffle = 1;
inline constexpr std::uint64_t kChannelTargets = 2;
inline constexpr std::uint64_t kChannelAttack = 3;
inline constexpr std::uint64_t kChannelInit = 4;
inline constexpr std::uint64_t kChannelSplit = 5;

}  // namespace fairtat
