// Acceptance gate. One line per criterion: "criterion N: PASS|FAIL".
// Exit status is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "fairtat/attacks.hpp"
#include "fairtat/config.hpp"
#include "fairtat/data.hpp"
#include "fairtat/experiment.hpp"
#include "fairtat/gradcheck.hpp"
#include "fairtat/metrics.hpp"
#include "fairtat/model.hpp"
#include "fairtat/rng.hpp"
#include "fairtat/sampler.hpp"
#include "fairtat/trainer.hpp"

using namespace fairtat;
namespace fs = std::filesystem;

namespace {

int failures = 0;

// Desk-scale knobs for the two data-dependent criteria (6 and 8): chosen so
// baseline AT lands in the required worst-class band and so gaussian noise
// degrades the CIFAR-sized model gradually.
constexpr double kC6Eps = 0.04;
constexpr std::size_t kC6PerClass = 300;
constexpr std::size_t kC6Epochs = 20;
constexpr double kC8Spread = 0.015;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  (%s)\n", criterion, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

fs::path scratch_dir() {
  fs::path p = fs::temp_directory_path() / "fairtat_acceptance";
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------- 1
void criterion_gradients() {
  Rng rng(1001);
  double worst = 0.0;
  std::size_t skipped = 0;
  bool ok = true;
  for (int i = 0; i < 100 && ok; ++i) {
    std::size_t depth = 1 + rng.below(3);  // up to 3 layers total
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l + 1 < depth; ++l)
      hidden.push_back(2 + rng.below(15));
    std::size_t in = 2 + rng.below(9);
    std::size_t k = 2 + rng.below(4);
    ModelParams m = init_model({in, hidden, k}, 5000 + i);

    std::size_t n = 2 + rng.below(3);
    Tensor x({n, in});
    for (auto& v : x.values) v = rng.uniform(0.0, 1.0);
    std::vector<int> y(n);
    for (auto& l : y) l = static_cast<int>(rng.below(k));

    CheckReport r = finite_difference_check(m, x, y, 1e-5, 1e-4);
    worst = std::max(worst, r.max_rel_error);
    skipped += r.num_skipped;
    ok = ok && r.passed;
  }
  std::ostringstream d;
  d << "100 MLPs, max rel err " << worst << ", " << skipped
    << " kink coords skipped";
  report(1, ok && worst < 1e-4, d.str());
}

// ---------------------------------------------------------------- 2
void criterion_attack_invariants() {
  Rng rng(1002);
  bool ok = true;
  std::size_t checked = 0;
  for (int rep = 0; rep < 1000 && ok; ++rep) {
    std::size_t in = 1 + rng.below(6);
    std::size_t k = 2 + rng.below(4);
    ModelParams m = init_model({in, {1 + rng.below(12)}, k},
                               9000 + static_cast<std::uint64_t>(rep));
    std::size_t n = 1 + rng.below(4);
    Tensor x({n, in});
    for (auto& v : x.values) v = rng.uniform(0.0, 1.0);
    std::vector<int> y(n);
    for (auto& l : y) l = static_cast<int>(rng.below(k));

    AttackConfig cfg;
    cfg.epsilon = rng.uniform(0.0, 0.25);
    cfg.step_size = rng.uniform(0.002, 0.08);
    cfg.num_steps = 1 + rng.below(8);
    cfg.random_start = rep % 3 == 0;
    Rng attack_rng(static_cast<std::uint64_t>(rep));

    auto holds = [&](const AdvBatch& adv) {
      for (std::size_t i = 0; i < adv.perturbed.size(); ++i) {
        double d = adv.perturbed.values[i] - adv.original.values[i];
        if (std::abs(d) > cfg.epsilon) return false;  // exact, no slack
        if (adv.perturbed.values[i] < 0.0 || adv.perturbed.values[i] > 1.0)
          return false;
      }
      return true;
    };
    ok = ok && holds(fgsm(m, x, y, cfg));
    ok = ok && holds(pgd_untargeted(m, x, y, cfg, &attack_rng));
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i)
      t[i] = (y[i] + 1) % static_cast<int>(k);
    ok = ok && holds(pgd_targeted(m, x, t, cfg, &attack_rng));

    // single-step pgd with alpha = eps and no random start == fgsm, bitwise
    AttackConfig one = cfg;
    one.num_steps = 1;
    one.step_size = one.epsilon;
    one.random_start = false;
    AdvBatch a = fgsm(m, x, y, one);
    AdvBatch b = pgd_untargeted(m, x, y, one);
    ok = ok && std::memcmp(a.perturbed.values.data(),
                           b.perturbed.values.data(),
                           a.perturbed.size() * sizeof(double)) == 0;
    ++checked;
  }
  report(2, ok, std::to_string(checked) + "/1000 randomized triples clean");
}

// ---------------------------------------------------------------- 3
void criterion_metric_oracles() {
  Rng rng(1003);
  bool ok = true;
  for (int rep = 0; rep < 10000 && ok; ++rep) {
    int k = 2 + static_cast<int>(rng.below(11));
    std::size_t n = 1 + rng.below(40);
    PredLog log;
    log.num_classes = k;
    std::vector<std::vector<std::size_t>> cm(
        static_cast<std::size_t>(k), std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < n; ++i) {
      int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      int l = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      log.append(p, l);
      cm[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)]++;
    }
    std::size_t mis = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b) mis += cm[a][b];

    double cfps_sum = 0.0;
    for (int c = 0; c < k; ++c) {
      std::size_t tp = cm[c][c], fn = 0, fp = 0;
      for (int b = 0; b < k; ++b)
        if (b != c) {
          fn += cm[c][b];
          fp += cm[b][c];
        }
      std::size_t tn = n - tp - fn - fp;
      double want_cacc = double(tp + tn) / double(n);
      double want_recall =
          (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
      double want_cfps = mis == 0 ? 1.0 / k : double(fp) / double(mis);
      ok = ok && std::abs(class_accuracy(log, c) - want_cacc) <= 1e-12;
      ok = ok && std::abs(class_recall(log, c) - want_recall) <= 1e-12;
      ok = ok && std::abs(cfps(log, c) - want_cfps) <= 1e-12;
      cfps_sum += cfps(log, c);
    }
    if (mis > 0) ok = ok && std::abs(cfps_sum - 1.0) <= 1e-9;

    // worst-decile summary against a sort-and-average oracle
    auto recalls = class_recall_all(log);
    WorstClassSummary s = worst_class_summary(recalls);
    std::vector<double> sorted = recalls;
    std::sort(sorted.begin(), sorted.end());
    std::size_t take = k <= 10 ? 1
                               : static_cast<std::size_t>(std::ceil(
                                     static_cast<double>(k) / 10.0));
    double mean =
        std::accumulate(sorted.begin(), sorted.begin() + take, 0.0) /
        static_cast<double>(take);
    ok = ok && std::abs(s.min_value - sorted.front()) <= 1e-12;
    ok = ok && std::abs(s.worst_decile_mean - mean) <= 1e-12;
  }
  report(3, ok, "10^4 random PredLogs vs brute-force confusion matrices");
}

// ---------------------------------------------------------------- 4
void criterion_sampler() {
  TargetDistribution d =
      build_prior({0.1, 0.2, 0.3, 0.4}, PriorKind::cfps_prior);

  Rng rng(1004);
  const std::size_t n = 100000;
  std::vector<int> labels(n, 3);
  std::vector<int> targets = sample_targets(labels, d, rng);
  std::vector<std::size_t> counts(4, 0);
  for (int t : targets) counts[t]++;
  std::vector<double> expect = {n / 6.0, 2.0 * n / 6.0, 3.0 * n / 6.0};
  double chi2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    double diff = double(counts[c]) - expect[c];
    chi2 += diff * diff / expect[c];
  }
  // chi-square(2 dof) 0.99 quantile = 9.210; below it means p > 0.01
  bool fit_ok = counts[3] == 0 && chi2 < 9.210;

  // ground-truth exclusion over 10^6 mixed-label draws
  std::vector<int> big(1000000);
  Rng lab_rng(5);
  for (auto& l : big) l = static_cast<int>(lab_rng.below(4));
  std::vector<int> big_t = sample_targets(big, d, rng);
  std::size_t collisions = 0;
  for (std::size_t i = 0; i < big.size(); ++i)
    if (big_t[i] == big[i]) ++collisions;

  std::ostringstream detail;
  detail << "chi2 " << chi2 << " (< 9.21), " << collisions
         << " collisions over 10^6 draws";
  report(4, fit_ok && collisions == 0, detail.str());
}

// ---------------------------------------------------------------- 5
void criterion_eps_calibration() {
  bool ok = true;
  std::size_t logged = 0;
  for (std::uint64_t seed = 0; seed < 3 && ok; ++seed) {
    Dataset d = make_three_class(60, 1.0, 4.0, 0.8, seed);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    cfg.hidden_dims = {24};
    cfg.attack.epsilon = 8.0 / 255.0;
    cfg.attack.step_size = 2.0 / 255.0;
    cfg.attack.num_steps = 5;
    cfg.lambda1 = 0.5;
    cfg.valid_fraction = 0.1;
    cfg.seed = seed;
    TrainResult r = fair_tat_train(cfg, d);
    for (const auto& rec : r.history.epochs) {
      for (std::size_t k = 0; k < rec.eps_k.size(); ++k) {
        ++logged;
        ok = ok && rec.eps_k[k] >= 0.5 * cfg.attack.epsilon &&
             rec.eps_k[k] <= 1.5 * cfg.attack.epsilon;
        // the identity must hold exactly against the logged r_k
        ok = ok &&
             rec.eps_k[k] == (cfg.lambda1 + rec.r_k[k]) * cfg.attack.epsilon;
      }
    }
  }
  report(5, ok,
         std::to_string(logged) + " logged eps_k values inside [0.5e, 1.5e]");
}

// ---------------------------------------------------------------- 6
void criterion_directional_fairness() {
  // Paired runs on the three-class scenario. Epsilon is fixed at a value
  // that puts baseline AT worst-class robust recall in [0.2, 0.6]; worst
  // recalls are measured on a 500-per-class held-out draw with PGD-10.
  const double kEps = kC6Eps;
  int fair_wins = 0;
  double fair_clean_worst = 0.0, at_clean_worst = 0.0;
  double at_worst_mean = 0.0;
  bool in_band = true;
  std::ostringstream per_seed;

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset d = make_three_class(kC6PerClass, 0.75, 4.0, 1.0, 42 + seed);
    Dataset held_out = make_three_class(500, 0.75, 4.0, 1.0, 9000 + seed);
    TrainConfig cfg;
    cfg.epochs = kC6Epochs;
    cfg.batch_size = 64;
    cfg.hidden_dims = {32, 32};
    cfg.attack.epsilon = kEps;
    cfg.attack.step_size = kEps / 4.0;
    cfg.attack.num_steps = 10;
    cfg.valid_fraction = 0.1;
    cfg.seed = seed;

    AttackConfig eval_attack = cfg.attack;
    eval_attack.random_start = false;
    auto worst_recall = [&](const ModelParams& m, bool robust) {
      PredLog log =
          robust ? robust_accuracy(m, held_out, eval_attack,
                                   AttackKind::pgd_untargeted)
                       .log
                 : clean_predictions(m, held_out);
      auto recalls = class_recall_all(log);
      return *std::min_element(recalls.begin(), recalls.end());
    };

    cfg.mode = TrainMode::untargeted_at;
    TrainResult at = fair_tat_train(cfg, d);
    cfg.mode = TrainMode::fair_tat;
    TrainResult ft = fair_tat_train(cfg, d);

    double at_worst = worst_recall(at.final_model, true);
    double ft_worst = worst_recall(ft.final_model, true);
    at_worst_mean += at_worst / 5.0;
    if (ft_worst >= at_worst) ++fair_wins;
    fair_clean_worst += worst_recall(ft.final_model, false) / 5.0;
    at_clean_worst += worst_recall(at.final_model, false) / 5.0;
    per_seed << " s" << seed << ": " << at_worst << "/" << ft_worst;
  }
  in_band = at_worst_mean >= 0.2 && at_worst_mean <= 0.6;
  bool ok = in_band && fair_wins >= 4 && fair_clean_worst >= at_clean_worst;
  std::ostringstream detail;
  detail << "AT-worst-mean " << at_worst_mean << ", fair wins " << fair_wins
         << "/5, clean worst " << at_clean_worst << " -> " << fair_clean_worst
         << ";" << per_seed.str();
  report(6, ok, detail.str());
}

// ---------------------------------------------------------------- 7
// Hard-coded complement-target training loop for K = 2, mirroring the
// trainer's stream discipline through the public API only.
ModelParams complement_loop(const TrainConfig& config, const Dataset& data,
                            std::vector<std::uint64_t>* per_epoch) {
  Rng base(config.seed);
  auto [train, valid] = split_dataset(
      data, config.valid_fraction,
      base.fork(stream_tag(0, 0, kChannelSplit)).seed());
  ModelParams model = init_model(
      {data.dim(), config.hidden_dims, 2},
      base.fork(stream_tag(0, 0, kChannelInit)).seed());
  SgdState sgd_state = make_sgd_state(model);
  std::vector<double> eps_k(2, config.attack.epsilon);

  std::size_t n = train.size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(),
                 base.fork(stream_tag(epoch, 0, kChannelShuffle)).engine());
    double lr = config.sgd.lr_at(epoch, config.epochs);
    PredLog adv_log;
    adv_log.num_classes = 2;

    for (std::size_t lo = 0, b = 0; lo < n; lo += config.batch_size, ++b) {
      std::size_t hi = std::min(lo + config.batch_size, n);
      Tensor x({hi - lo, train.dim()});
      std::vector<int> y(hi - lo);
      for (std::size_t r = lo; r < hi; ++r) {
        std::copy_n(train.features.values.begin() + order[r] * train.dim(),
                    train.dim(), x.values.begin() + (r - lo) * train.dim());
        y[r - lo] = train.labels[order[r]];
      }
      std::vector<int> targets(y.size());
      std::vector<double> eps(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        targets[i] = 1 - y[i];  // the complement, no sampling
        eps[i] = eps_k[static_cast<std::size_t>(y[i])];
      }
      Rng attack_rng = base.fork(stream_tag(epoch, b, kChannelAttack));
      Tensor x_adv =
          pgd_targeted(model, x, targets, config.attack, &attack_rng, &eps)
              .perturbed;

      Tape tape;
      std::vector<Var> pvars;
      Var logits = model_forward(tape, model, tape.leaf(x_adv), true, &pvars);
      Tensor logit_vals = tape.value(logits);
      tape.backward(tape.mean(tape.softmax_cross_entropy(logits, y, 2)));
      std::vector<std::vector<double>> grads;
      for (Var pv : pvars) {
        auto g = tape.grad(pv);
        grads.emplace_back(g.begin(), g.end());
      }
      sgd_step(model, grads, sgd_state, config.sgd, lr);

      for (std::size_t i = 0; i < y.size(); ++i) {
        const double* row = logit_vals.values.data() + i * 2;
        adv_log.append(row[1] > row[0] ? 1 : 0, y[i]);
      }
    }
    auto r_k = class_recall_all(adv_log);
    eps_k = update_epsilons(r_k, config.attack.epsilon, config.lambda1);
    per_epoch->push_back(model.checksum());
  }
  return model;
}

void criterion_k2_equivalence() {
  Rng rng(1007);
  bool ok = true;
  for (int rep = 0; rep < 5 && ok; ++rep) {
    Dataset d = make_blobs(2, 40 + 10 * rep, 3, 2.0, 0.8,
                           700 + static_cast<std::uint64_t>(rep));
    TrainConfig cfg;
    cfg.epochs = 2 + rng.below(2);
    cfg.batch_size = 16 + 8 * rng.below(3);
    cfg.hidden_dims = {4 + rng.below(12)};
    cfg.attack.epsilon = rng.uniform(0.01, 0.08);
    cfg.attack.step_size = cfg.attack.epsilon / 3.0;
    cfg.attack.num_steps = 1 + rng.below(6);
    cfg.valid_fraction = 0.1;
    cfg.seed = 7000 + static_cast<std::uint64_t>(rep);

    std::vector<std::uint64_t> hand_trajectory;
    ModelParams hand = complement_loop(cfg, d, &hand_trajectory);

    // drive the real trainer epoch by epoch to capture its trajectory
    Rng base(cfg.seed);
    auto [train, valid] = split_dataset(
        d, cfg.valid_fraction, base.fork(stream_tag(0, 0, kChannelSplit)).seed());
    ModelParams model = init_model(
        {d.dim(), cfg.hidden_dims, 2},
        base.fork(stream_tag(0, 0, kChannelInit)).seed());
    SgdState st = make_sgd_state(model);
    ClassStatsState stats;
    stats.r_k.assign(2, 0.0);
    stats.cfps_k.assign(2, 0.0);
    stats.eps_k.assign(2, cfg.attack.epsilon);
    stats.prior = build_prior(stats.cfps_k, cfg.prior_kind);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      train_epoch(model, train, stats, cfg, st, e);
      ok = ok && model.checksum() == hand_trajectory[e];
    }
    ok = ok && model.checksum() == hand.checksum();

    // and the full driver lands on the same parameters
    TrainResult full = fair_tat_train(cfg, d);
    ok = ok && full.final_model.checksum() == hand.checksum();
  }
  report(7, ok, "5 random K=2 configs, bit-identical trajectories");
}

// ---------------------------------------------------------------- 8
void criterion_corruption_protocol() {
  // CIFAR-10 sized corpus in the standard binary layout: 2000 synthetic
  // 3072-d images across 10 classes, written and re-loaded through the
  // binary codec.
  fs::path dir = scratch_dir() / "cifar_like";
  fs::create_directories(dir);
  Dataset raw = make_blobs(10, 200, 3072, kC8Spread, 0.06, 77);
  write_cifar10_batch(raw, (dir / "data_batch_1.bin").string());
  Dataset data = load_cifar10(dir.string(), 0, 0);
  bool ok = data.size() == 2000 && data.dim() == 3072;

  // desk-scale model, clean-trained; linear so the correct region along a
  // noise ray is an interval and recall degrades monotonically
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 128;
  cfg.hidden_dims = {};
  cfg.mode = TrainMode::untargeted_at;
  cfg.attack.epsilon = 0.0;
  cfg.attack.step_size = 0.01;
  cfg.attack.num_steps = 1;
  cfg.valid_fraction = 0.05;
  cfg.sgd.learning_rate = 0.05;
  cfg.seed = 3;
  TrainResult r = fair_tat_train(cfg, data);

  // per-class accuracy vs gaussian severity: non-increasing, one inversion
  // of at most 0.01 allowed per class
  std::vector<std::vector<double>> acc_by_sev;
  for (int sev = 1; sev <= 5; ++sev) {
    Dataset c = corrupt(data, {CorruptionKind::gaussian_noise, sev}, 101);
    PredLog log = clean_predictions(r.final_model, c);
    acc_by_sev.push_back(class_recall_all(log));
  }
  int total_inversions = 0;
  double max_inversion = 0.0;
  for (int cl = 0; cl < 10; ++cl) {
    int inversions = 0;
    for (int sev = 1; sev < 5; ++sev) {
      double rise = acc_by_sev[sev][cl] - acc_by_sev[sev - 1][cl];
      if (rise > 0.0) {
        ++inversions;
        max_inversion = std::max(max_inversion, rise);
      }
    }
    total_inversions = std::max(total_inversions, inversions);
  }
  ok = ok && total_inversions <= 1 && max_inversion <= 0.01;

  // report structure: kind x severity rows with per-class minima
  ExperimentConfig ec;
  ec.dataset.kind = "cifar10";
  ec.dataset.path = dir.string();
  ec.eval.epsilons = {0.0};
  for (int kind = 0; kind < 6; ++kind)
    ec.eval.corruptions.push_back(static_cast<CorruptionKind>(kind));
  auto table = evaluate_model(r.final_model, data, ec, "final");
  const auto& rows = table.at("corruptions");
  ok = ok && rows.size() == 6 * 5;
  for (const auto& row : rows) {
    ok = ok && row.contains("kind") && row.contains("severity") &&
         row.at("recall").size() == 10 &&
         row.at("worst_recall").contains("min");
  }
  std::ostringstream detail;
  detail << "worst inversion " << max_inversion << " (<= 0.01), "
         << rows.size() << " corruption rows";
  report(8, ok, detail.str());
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- 9
void criterion_determinism() {
  fs::path base = scratch_dir();
  auto make_config = [&](const std::string& out) {
    ExperimentConfig ec;
    ec.dataset.kind = "three_class";
    ec.dataset.n_per_class = 50;
    ec.train.epochs = 3;
    ec.train.batch_size = 32;
    ec.train.hidden_dims = {16};
    ec.train.attack.epsilon = 0.03;
    ec.train.attack.step_size = 0.01;
    ec.train.attack.num_steps = 5;
    ec.train.valid_fraction = 0.1;
    ec.eval.epsilons = {0.0, 0.03};
    ec.eval.corruptions = {CorruptionKind::gaussian_noise};
    ec.eval.severities = {1, 3};
    ec.seeds = {0, 1};
    ec.output_dir = (base / out).string();
    return ec;
  };
  run_experiment(make_config("det_a"));
  run_experiment(make_config("det_b"));

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  // identical apart from the echoed output directory
  std::string a = slurp(base / "det_a" / "report.json");
  std::string b = slurp(base / "det_b" / "report.json");
  std::string needle_a = (base / "det_a").string();
  std::string needle_b = (base / "det_b").string();
  for (std::size_t pos; (pos = a.find(needle_a)) != std::string::npos;)
    a.replace(pos, needle_a.size(), "OUT");
  for (std::size_t pos; (pos = b.find(needle_b)) != std::string::npos;)
    b.replace(pos, needle_b.size(), "OUT");
  bool ok = !a.empty() && a == b;

  std::string failure = verify_report((base / "det_a" / "report.json").string());
  ok = ok && failure.empty();
  report(9, ok,
         failure.empty() ? "byte-identical reports, verify within 1e-9"
                         : "verify: " + failure);
  fs::remove_all(base / "det_a");
  fs::remove_all(base / "det_b");
}

// ---------------------------------------------------------------- 10
void criterion_fawa() {
  // Scripted checkpoints with hand-known per-class behavior. The dataset
  // places each class at a distinct coordinate with margin far above eps,
  // so the "identity" model is exactly right on all classes even under
  // attack, and the constant model always answers class 0.
  Dataset d = make_blobs(3, 20, 3, 8.0, 0.01, 55);
  AttackConfig attack;
  attack.epsilon = 0.005;
  attack.step_size = 0.002;
  attack.num_steps = 3;

  // constant model: zero weights, bias favors class 0 -> recalls [1, 0, 0]
  ModelParams constant;
  constant.dims = {3, {}, 3};
  {
    ModelParams::Layer l;
    l.weight = Tensor({3, 3});
    l.bias = Tensor({3}, std::vector<double>{1.0, 0.0, -1.0});
    constant.layers.push_back(l);
  }
  FawaDecision dec = fawa_gate(constant, d, attack, 0.2);
  bool ok = !dec.accepted && dec.worst_class_robust == 0.0;
  // gradient of the constant model w.r.t. x is zero, so robustness equals
  // clean accuracy: exactly one third on balanced data
  ok = ok && std::abs(dec.overall_robust - 1.0 / 3.0) < 1e-12;

  // strong model trained to saturation accepts at any sane threshold
  TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 30;
  tc.hidden_dims = {16};
  tc.mode = TrainMode::untargeted_at;
  tc.attack = attack;
  tc.valid_fraction = 0.1;
  tc.sgd.learning_rate = 0.2;
  TrainResult strong = fair_tat_train(tc, d);
  FawaDecision dec2 = fawa_gate(strong.final_model, d, attack, 0.2);
  ok = ok && dec2.accepted;

  // the decision rule itself matches the hand simulation everywhere
  for (std::uint64_t s = 0; s < 8; ++s) {
    ModelParams m = init_model({3, {8}, 3}, 400 + s);
    for (double thr : {0.0, 0.2, 0.5, 1.0}) {
      FawaDecision x = fawa_gate(m, d, attack, thr);
      ok = ok && x.accepted == (x.worst_class_robust >= thr * x.overall_robust);
    }
  }

  // threshold = 0 degenerates to plain EMA, bit for bit
  Dataset td = make_three_class(40, 1.0, 4.0, 0.8, 12);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  cfg.hidden_dims = {16};
  cfg.attack.epsilon = 0.03;
  cfg.attack.step_size = 0.01;
  cfg.attack.num_steps = 5;
  cfg.valid_fraction = 0.1;
  cfg.averaging.kind = AveragingKind::ema;
  cfg.averaging.alpha = 0.9;
  cfg.averaging.start_epoch = 2;
  TrainResult ema = fair_tat_train(cfg, td);
  cfg.averaging.kind = AveragingKind::fawa;
  cfg.averaging.fairness_threshold = 0.0;
  TrainResult fawa = fair_tat_train(cfg, td);
  ok = ok && ema.averaged_model.checksum() == fawa.averaged_model.checksum();

  report(10, ok, "scripted gate decisions + threshold-0 EMA degeneracy");
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion_gradients();
  criterion_attack_invariants();
  criterion_metric_oracles();
  criterion_sampler();
  criterion_eps_calibration();
  criterion_directional_fairness();
  criterion_k2_equivalence();
  criterion_corruption_protocol();
  criterion_determinism();
  criterion_fawa();
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  std::printf("%d/10 criteria passed in %.1f s\n", 10 - failures, secs);
  return failures;
}
