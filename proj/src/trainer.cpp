#include "fairtat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace fairtat {

std::uint64_t stream_tag(std::size_t epoch, std::size_t batch,
                         std::uint64_t channel) {
  return (static_cast<std::uint64_t>(epoch + 1) << 32) ^
         (static_cast<std::uint64_t>(batch + 1) << 8) ^ channel;
}

void TrainConfig::validate() const {
  sgd.validate();
  attack.validate();
  if (batch_size == 0) throw std::domain_error("TrainConfig: batch_size == 0");
  if (lambda1 <= 0.0) {
    throw std::domain_error("TrainConfig: lambda1 must be > 0");
  }
  if (trades_beta < 0.0) {
    throw std::domain_error("TrainConfig: trades beta must be >= 0");
  }
  if (valid_fraction <= 0.0 || valid_fraction >= 0.5) {
    throw std::domain_error("TrainConfig: valid_fraction must be in (0, 0.5)");
  }
  if (averaging.fairness_threshold < 0.0 ||
      averaging.fairness_threshold > 1.0) {
    throw std::domain_error("TrainConfig: fairness_threshold outside [0, 1]");
  }
  if (averaging.alpha < 0.0 || averaging.alpha >= 1.0) {
    throw std::domain_error("TrainConfig: averaging alpha outside [0, 1)");
  }
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double valid_fraction,
                                          std::uint64_t seed) {
  if (valid_fraction <= 0.0 || valid_fraction >= 0.5) {
    throw std::domain_error("split_dataset: valid_fraction outside (0, 0.5)");
  }
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  for (int c = 0; c < data.num_classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < 2) {
      throw std::domain_error("split_dataset: class " + std::to_string(c) +
                              " has fewer than 2 samples");
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> train_idx, valid_idx;
  for (auto& idxs : by_class) {
    std::shuffle(idxs.begin(), idxs.end(), rng.engine());
    auto take = static_cast<std::size_t>(
        std::ceil(valid_fraction * static_cast<double>(idxs.size())));
    take = std::min(take, idxs.size() - 1);  // keep every class in train
    valid_idx.insert(valid_idx.end(), idxs.begin(), idxs.begin() + take);
    train_idx.insert(train_idx.end(), idxs.begin() + take, idxs.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(valid_idx.begin(), valid_idx.end());
  Dataset train = data.subset(train_idx);
  Dataset valid = data.subset(valid_idx);
  train.split_tag = "train";
  valid.split_tag = "valid";
  return {std::move(train), std::move(valid)};
}

std::vector<double> update_epsilons(const std::vector<double>& r_k,
                                    double base_eps, double lambda1) {
  std::vector<double> eps(r_k.size());
  for (std::size_t k = 0; k < r_k.size(); ++k) {
    if (r_k[k] < 0.0 || r_k[k] > 1.0) {
      throw std::domain_error("update_epsilons: r_k outside [0, 1]");
    }
    eps[k] = (lambda1 + r_k[k]) * base_eps;
  }
  return eps;
}

FawaDecision fawa_gate(const ModelParams& checkpoint, const Dataset& valid,
                       const AttackConfig& attack, double threshold) {
  if (valid.size() == 0) throw std::domain_error("fawa_gate: empty valid set");
  RobustEval eval = robust_accuracy(checkpoint, valid, attack,
                                    AttackKind::pgd_untargeted);
  auto recalls = class_recall_all(eval.log);
  FawaDecision d;
  d.overall_robust = eval.accuracy;
  d.worst_class_robust = *std::min_element(recalls.begin(), recalls.end());
  d.accepted = d.worst_class_robust >= threshold * d.overall_robust;
  return d;
}

namespace {

// A one-hot C_FPS vector (every misclassification hit the same class) leaves
// that class with no valid target, so restart from the uniform prior just
// like the cold-start epoch.
TargetDistribution safe_prior(const std::vector<double>& cfps_k,
                              PriorKind kind) {
  TargetDistribution p = build_prior(cfps_k, kind);
  for (double q : p.probs) {
    if (q >= 1.0) {
      return build_prior(std::vector<double>(cfps_k.size(), 0.0), kind);
    }
  }
  return p;
}

Tensor gather_rows(const Tensor& features, const std::vector<std::size_t>& idx,
                   std::size_t lo, std::size_t hi) {
  std::size_t d = features.cols();
  Tensor out({hi - lo, d});
  for (std::size_t r = lo; r < hi; ++r) {
    std::copy_n(features.values.begin() + idx[r] * d, d,
                out.values.begin() + (r - lo) * d);
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::size_t n = logits.shape[0], k = logits.shape[1];
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.values.data() + i * k;
    out[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

}  // namespace

EpochRecord train_epoch(ModelParams& model, const Dataset& train_data,
                        ClassStatsState& stats, const TrainConfig& config,
                        SgdState& sgd_state, std::size_t epoch) {
  int k = train_data.num_classes;
  std::size_t n = train_data.size();
  Rng base(config.seed);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(),
               base.fork(stream_tag(epoch, 0, kChannelShuffle)).engine());

  double lr = config.sgd.lr_at(epoch, config.epochs);

  PredLog adv_log;
  adv_log.num_classes = k;
  PredLog clean_log;
  clean_log.num_classes = k;
  bool want_clean_log = config.cfps_source == CfpsSource::clean ||
                        config.loss_kind == LossKind::trades;

  double loss_sum = 0.0;
  std::size_t num_batches = 0;

  for (std::size_t lo = 0, b = 0; lo < n; lo += config.batch_size, ++b) {
    std::size_t hi = std::min(lo + config.batch_size, n);
    Tensor x = gather_rows(train_data.features, order, lo, hi);
    std::vector<int> y(hi - lo);
    for (std::size_t r = lo; r < hi; ++r) {
      y[r - lo] = train_data.labels[order[r]];
    }

    // Adversarial example generation (Alg. 1 lines 11-20).
    Tensor x_adv;
    Rng attack_rng = base.fork(stream_tag(epoch, b, kChannelAttack));
    if (config.mode == TrainMode::fair_tat) {
      Rng target_rng = base.fork(stream_tag(epoch, b, kChannelTargets));
      std::vector<int> targets = sample_targets(y, stats.prior, target_rng);
      std::vector<double> eps(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        int key = config.eps_keying == EpsKeying::ground_truth
                      ? y[i]
                      : targets[i];
        eps[i] = stats.eps_k[static_cast<std::size_t>(key)];
      }
      x_adv = pgd_targeted(model, x, targets, config.attack, &attack_rng, &eps)
                  .perturbed;
    } else {
      x_adv =
          pgd_untargeted(model, x, y, config.attack, &attack_rng).perturbed;
    }

    // Loss, gradients, SGD update (Alg. 1 line 21).
    Tape tape;
    std::vector<Var> pvars;
    Var adv_in = tape.leaf(x_adv);
    Var loss;
    Tensor adv_logits_val;
    if (config.loss_kind == LossKind::cross_entropy) {
      Var adv_logits = model_forward(tape, model, adv_in, true, &pvars);
      adv_logits_val = tape.value(adv_logits);
      loss = tape.mean(tape.softmax_cross_entropy(adv_logits, y, k));
      if (want_clean_log) {
        Tensor cl = model_logits(model, x);
        auto preds = argmax_rows(cl);
        for (std::size_t i = 0; i < preds.size(); ++i) {
          clean_log.append(preds[i], y[i]);
        }
      }
    } else {
      // CE(f(x), y) + beta * KL(softmax(f(x')) || softmax(f(x))).
      Var clean_in = tape.leaf(x);
      Var clean_logits = model_forward(tape, model, clean_in, true, &pvars);
      Var adv_logits = model_forward(tape, model, adv_in, true, &pvars);
      adv_logits_val = tape.value(adv_logits);
      Var ce = tape.mean(tape.softmax_cross_entropy(clean_logits, y, k));
      Var kl = tape.mean(tape.kl_divergence(adv_logits, clean_logits));
      loss = tape.add(ce, tape.mul_scalar(kl, config.trades_beta));
      auto preds = argmax_rows(tape.value(clean_logits));
      for (std::size_t i = 0; i < preds.size(); ++i) {
        clean_log.append(preds[i], y[i]);
      }
    }
    double loss_val = tape.value(loss).values[0];
    if (!std::isfinite(loss_val)) {
      throw std::runtime_error("train_epoch: non-finite loss at epoch " +
                               std::to_string(epoch) + " batch " +
                               std::to_string(b));
    }
    loss_sum += loss_val;
    ++num_batches;
    tape.backward(loss);
    std::vector<std::vector<double>> grads;
    grads.reserve(pvars.size());
    for (Var pv : pvars) {
      auto g = tape.grad(pv);
      grads.emplace_back(g.begin(), g.end());
    }
    sgd_step(model, grads, sgd_state, config.sgd, lr);

    // Accumulate adversarial-prediction logs for R_k and C_FPS.
    auto adv_preds = argmax_rows(adv_logits_val);
    for (std::size_t i = 0; i < adv_preds.size(); ++i) {
      adv_log.append(adv_preds[i], y[i]);
    }

    if (config.prior_per_batch) {
      const PredLog& src =
          config.cfps_source == CfpsSource::clean ? clean_log : adv_log;
      stats.cfps_k = cfps_all(src);
      stats.prior = safe_prior(stats.cfps_k, config.prior_kind);
    }
  }

  // Per-class statistics refresh and epsilon calibration (lines 24-27).
  stats.r_k = class_recall_all(adv_log);
  const PredLog& cfps_src =
      config.cfps_source == CfpsSource::clean ? clean_log : adv_log;
  stats.cfps_k = cfps_all(cfps_src);
  stats.eps_k = update_epsilons(stats.r_k, config.attack.epsilon,
                                config.lambda1);
  stats.prior = safe_prior(stats.cfps_k, config.prior_kind);

  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss_mean =
      num_batches == 0 ? 0.0 : loss_sum / static_cast<double>(num_batches);
  rec.cfps = stats.cfps_k;
  rec.r_k = stats.r_k;
  rec.eps_k = stats.eps_k;
  rec.prior = stats.prior.probs;
  return rec;
}

TrainResult fair_tat_train(const TrainConfig& config, const Dataset& dataset) {
  config.validate();
  dataset.validate();
  Rng base(config.seed);

  auto [train, valid] = split_dataset(
      dataset, config.valid_fraction,
      base.fork(stream_tag(0, 0, kChannelSplit)).seed());

  ModelDims dims;
  dims.input_dim = dataset.dim();
  dims.hidden_dims = config.hidden_dims;
  dims.num_classes = static_cast<std::size_t>(dataset.num_classes);
  ModelParams model =
      init_model(dims, base.fork(stream_tag(0, 0, kChannelInit)).seed());
  ModelParams avg = model;

  ClassStatsState stats;
  stats.r_k.assign(dataset.num_classes, 0.0);
  stats.cfps_k.assign(dataset.num_classes, 0.0);
  stats.eps_k.assign(dataset.num_classes, config.attack.epsilon);
  stats.prior = build_prior(stats.cfps_k, config.prior_kind);  // uniform

  SgdState sgd_state = make_sgd_state(model);

  // Evaluation attack: uniform base epsilon, deterministic (no random start).
  AttackConfig eval_attack = config.attack;
  eval_attack.random_start = false;

  std::size_t avg_start = config.averaging.resolved_start(config.epochs);

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec =
        train_epoch(model, train, stats, config, sgd_state, epoch);

    PredLog clean = clean_predictions(model, valid);
    RobustEval robust = robust_accuracy(model, valid, eval_attack,
                                        AttackKind::pgd_untargeted);
    rec.clean_acc = clean_accuracy(clean);
    rec.robust_acc = robust.accuracy;
    rec.clean_recall = class_recall_all(clean);
    rec.robust_recall = class_recall_all(robust.log);
    rec.worst_clean_recall =
        *std::min_element(rec.clean_recall.begin(), rec.clean_recall.end());
    rec.worst_robust_recall =
        *std::min_element(rec.robust_recall.begin(), rec.robust_recall.end());

    if (config.averaging.kind == AveragingKind::none) {
      // Averaged model mirrors the live model.
    } else if (epoch < avg_start) {
      avg = model;
    } else if (config.averaging.kind == AveragingKind::ema) {
      average_update(avg, model, config.averaging.alpha);
      rec.averaging_event = "ema";
    } else {
      FawaDecision d = fawa_gate(model, valid, eval_attack,
                                 config.averaging.fairness_threshold);
      if (d.accepted) {
        average_update(avg, model, config.averaging.alpha);
        rec.averaging_event = "fawa_accept";
      } else {
        rec.averaging_event = "fawa_reject";
      }
    }

    if (config.verbose) {
      double eps_min =
          *std::min_element(stats.eps_k.begin(), stats.eps_k.end());
      double eps_max =
          *std::max_element(stats.eps_k.begin(), stats.eps_k.end());
      std::printf(
          "epoch %3zu  clean %.4f  robust %.4f  worst-robust %.4f  "
          "eps_k [%.5f, %.5f]\n",
          epoch, rec.clean_acc, rec.robust_acc, rec.worst_robust_recall,
          eps_min, eps_max);
      std::fflush(stdout);
    }

    result.history.epochs.push_back(std::move(rec));
  }

  result.final_model = std::move(model);
  result.averaged_model =
      config.averaging.kind == AveragingKind::none ? result.final_model : avg;
  return result;
}

}  // namespace fairtat
