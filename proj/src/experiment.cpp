#include "fairtat/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fairtat {

namespace {

using nlohmann::ordered_json;

ordered_json summary_json(const std::vector<double>& per_class) {
  WorstClassSummary s = worst_class_summary(per_class);
  return {{"min", s.min_value},
          {"argmin_class", s.argmin_class},
          {"worst_decile_mean", s.worst_decile_mean}};
}

ordered_json epoch_json(const EpochRecord& rec) {
  return {{"epoch", rec.epoch},
          {"train_loss_mean", rec.train_loss_mean},
          {"clean_acc", rec.clean_acc},
          {"robust_acc", rec.robust_acc},
          {"clean_recall", rec.clean_recall},
          {"robust_recall", rec.robust_recall},
          {"worst_clean_recall", rec.worst_clean_recall},
          {"worst_robust_recall", rec.worst_robust_recall},
          {"cfps", rec.cfps},
          {"r_k", rec.r_k},
          {"eps_k", rec.eps_k},
          {"prior", rec.prior},
          {"averaging_event", rec.averaging_event}};
}

ordered_json pred_metrics_json(const PredLog& log) {
  return {{"accuracy", clean_accuracy(log)},
          {"recall", class_recall_all(log)},
          {"class_accuracy", class_accuracy_all(log)},
          {"worst_recall", summary_json(class_recall_all(log))},
          {"cfps", cfps_all(log)}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

std::string report_cfps_bars(const PredLog& log) {
  if (log.size() == 0) {
    throw std::domain_error("report_cfps_bars: empty prediction log");
  }
  std::vector<double> scores = cfps_all(log);
  std::ostringstream out;
  out.precision(17);
  out << "class,cfps\n";
  for (std::size_t c = 0; c < scores.size(); ++c) {
    out << c << "," << scores[c] << "\n";
  }
  return out.str();
}

nlohmann::ordered_json evaluate_model(const ModelParams& params,
                                      const Dataset& eval_data,
                                      const ExperimentConfig& config,
                                      const std::string& model_tag) {
  ordered_json out;
  out["model"] = model_tag;

  PredLog clean = clean_predictions(params, eval_data);
  out["clean"] = pred_metrics_json(clean);

  // During inference the margin is uniform across classes.
  ordered_json attacks = ordered_json::array();
  for (double eps : config.eval.epsilons) {
    AttackConfig attack;
    attack.epsilon = eps;
    attack.num_steps = config.eval.num_steps;
    attack.step_size = config.eval.step_size;
    attack.random_start = false;
    RobustEval eval = eps == 0.0
                          ? RobustEval{clean_accuracy(clean), clean}
                          : robust_accuracy(params, eval_data, attack,
                                            AttackKind::pgd_untargeted);
    ordered_json a = pred_metrics_json(eval.log);
    a["attack"] = "pgd_untargeted";
    a["epsilon"] = eps;
    a["num_steps"] = config.eval.num_steps;
    a["step_size"] = config.eval.step_size;
    attacks.push_back(std::move(a));
  }
  out["attacks"] = std::move(attacks);

  ordered_json corruptions = ordered_json::array();
  for (CorruptionKind kind : config.eval.corruptions) {
    for (int severity : config.eval.severities) {
      CorruptionSpec spec{kind, severity};
      // Corruption noise seed is fixed by (data seed, kind, severity) so
      // reports are reproducible.
      std::uint64_t seed = config.dataset.seed ^
                           (static_cast<std::uint64_t>(kind) << 16) ^
                           static_cast<std::uint64_t>(severity);
      Dataset corrupted = corrupt(eval_data, spec, seed);
      PredLog log = clean_predictions(params, corrupted);
      ordered_json c = pred_metrics_json(log);
      c["kind"] = corruption_name(kind);
      c["severity"] = severity;
      corruptions.push_back(std::move(c));
    }
  }
  out["corruptions"] = std::move(corruptions);
  return out;
}

namespace {

void append_per_class_rows(std::ostringstream& per_class,
                           std::ostringstream& cfps_rows, std::uint64_t seed,
                           const std::string& model,
                           const std::string& context,
                           const ordered_json& metrics) {
  const auto& recall = metrics.at("recall");
  const auto& cacc = metrics.at("class_accuracy");
  const auto& cfps = metrics.at("cfps");
  for (std::size_t c = 0; c < recall.size(); ++c) {
    per_class << seed << "," << model << "," << context << "," << c << ","
              << recall[c].get<double>() << "," << cacc[c].get<double>()
              << "\n";
    cfps_rows << seed << "," << model << "," << context << "," << c << ","
              << cfps[c].get<double>() << "\n";
  }
}

std::string attack_context(const ordered_json& a) {
  std::ostringstream s;
  s.precision(17);
  s << "pgd_eps=" << a.at("epsilon").get<double>();
  return s.str();
}

}  // namespace

nlohmann::ordered_json run_experiment(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);

  Dataset train_data = build_dataset(config.dataset);
  Dataset eval_data = build_eval_dataset(config.dataset);

  ordered_json report;
  report["format"] = "fairtat-report-v1";
  report["config"] = config.resolved();
  ordered_json seeds = ordered_json::array();
  ordered_json timings;
  double total_seconds = 0.0;

  std::ostringstream per_class, cfps_rows, corruption_rows;
  per_class << "seed,model,context,class,recall,class_accuracy\n";
  cfps_rows << "seed,model,context,class,cfps\n";
  corruption_rows << "seed,model,kind,severity,accuracy,min_class_recall";
  for (int c = 0; c < eval_data.num_classes; ++c) {
    corruption_rows << ",recall_c" << c;
  }
  corruption_rows << "\n";
  per_class.precision(17);
  cfps_rows.precision(17);
  corruption_rows.precision(17);

  std::string fig1_csv;

  for (std::uint64_t seed : config.seeds) {
    auto t0 = std::chrono::steady_clock::now();
    TrainConfig tc = config.train;
    tc.seed = seed;
    TrainResult result = fair_tat_train(tc, train_data);

    std::string ck_final = config.output_dir + "/checkpoint_s" +
                           std::to_string(seed) + "_final.json";
    std::string ck_avg = config.output_dir + "/checkpoint_s" +
                         std::to_string(seed) + "_averaged.json";
    save_checkpoint(result.final_model, ck_final, seed, config.train.epochs);
    save_checkpoint(result.averaged_model, ck_avg, seed, config.train.epochs);

    ordered_json seed_json;
    seed_json["seed"] = seed;
    ordered_json history = ordered_json::array();
    for (const EpochRecord& rec : result.history.epochs) {
      history.push_back(epoch_json(rec));
    }
    seed_json["history"] = std::move(history);

    ordered_json models = ordered_json::array();
    for (const auto& [tag, params, ck] :
         {std::tuple<std::string, const ModelParams*, std::string>{
              "final", &result.final_model, ck_final},
          {"averaged", &result.averaged_model, ck_avg}}) {
      ordered_json m = evaluate_model(*params, eval_data, config, tag);
      m["checkpoint"] = fs::path(ck).filename().string();

      append_per_class_rows(per_class, cfps_rows, seed, tag, "clean",
                            m.at("clean"));
      for (const auto& a : m.at("attacks")) {
        append_per_class_rows(per_class, cfps_rows, seed, tag,
                              attack_context(a), a);
      }
      for (const auto& c : m.at("corruptions")) {
        const auto& recall = c.at("recall");
        double min_recall = 1.0;
        for (const auto& r : recall) min_recall = std::min(min_recall, r.get<double>());
        corruption_rows << seed << "," << tag << ","
                        << c.at("kind").get<std::string>() << ","
                        << c.at("severity").get<int>() << ","
                        << c.at("accuracy").get<double>() << "," << min_recall;
        for (const auto& r : recall) corruption_rows << "," << r.get<double>();
        corruption_rows << "\n";
      }

      if (fig1_csv.empty() && tag == "final" && !m.at("attacks").empty()) {
        // Fig.-1-style bars: C_FPS of the first seed's final model under the
        // strongest evaluated attack.
        const auto& last = m.at("attacks").back();
        AttackConfig attack;
        attack.epsilon = last.at("epsilon").get<double>();
        attack.num_steps = config.eval.num_steps;
        attack.step_size = config.eval.step_size;
        attack.random_start = false;
        RobustEval ev =
            attack.epsilon == 0.0
                ? RobustEval{0.0, clean_predictions(*params, eval_data)}
                : robust_accuracy(*params, eval_data, attack,
                                  AttackKind::pgd_untargeted);
        fig1_csv = report_cfps_bars(ev.log);
      }
      models.push_back(std::move(m));
    }
    seed_json["models"] = std::move(models);
    seeds.push_back(std::move(seed_json));

    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    timings["seed_" + std::to_string(seed) + "_seconds"] = secs;
    total_seconds += secs;
  }
  report["seeds"] = std::move(seeds);
  timings["total_seconds"] = total_seconds;

  write_text(config.output_dir + "/report.json", report.dump(2) + "\n");
  write_text(config.output_dir + "/timings.json", timings.dump(2) + "\n");
  write_text(config.output_dir + "/per_class.csv", per_class.str());
  write_text(config.output_dir + "/cfps.csv",
             fig1_csv.empty() ? cfps_rows.str() : fig1_csv);
  write_text(config.output_dir + "/cfps_full.csv", cfps_rows.str());
  write_text(config.output_dir + "/corruption.csv", corruption_rows.str());
  return report;
}

nlohmann::ordered_json evaluate_checkpoint(const std::string& checkpoint_path,
                                           const ExperimentConfig& config) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Dataset eval_data = build_eval_dataset(config.dataset);
  ordered_json out = evaluate_model(ck.params, eval_data, config,
                                    std::filesystem::path(checkpoint_path)
                                        .filename()
                                        .string());
  out["checkpoint"] = checkpoint_path;
  out["seed"] = ck.seed;
  return out;
}

namespace {

// Recursive numeric comparison; returns a path string on mismatch.
std::string compare_json(const ordered_json& a, const ordered_json& b,
                         double tol, const std::string& path) {
  if (a.is_number() || b.is_number()) {
    if (!a.is_number() || !b.is_number()) {
      return path + ": type mismatch";
    }
    // Parsed integers can come back as a different width class; compare all
    // numbers through double with the tolerance.
    double da = a.get<double>(), db = b.get<double>();
    if (std::abs(da - db) > tol) {
      return path + ": " + std::to_string(da) + " vs " + std::to_string(db);
    }
    return "";
  }
  if (a.type() != b.type()) return path + ": type mismatch";
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key())) return path + "." + it.key() + ": missing";
      std::string r =
          compare_json(it.value(), b.at(it.key()), tol, path + "." + it.key());
      if (!r.empty()) return r;
    }
    if (a.size() != b.size()) return path + ": key count mismatch";
    return "";
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return path + ": length mismatch";
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::string r = compare_json(a[i], b[i], tol,
                                   path + "[" + std::to_string(i) + "]");
      if (!r.empty()) return r;
    }
    return "";
  }
  if (a != b) return path + ": value mismatch";
  return "";
}

}  // namespace

std::string verify_report(const std::string& report_path, double tol) {
  namespace fs = std::filesystem;
  std::ifstream in(report_path);
  if (!in) return "cannot open " + report_path;
  ordered_json report = ordered_json::parse(in);
  if (report.value("format", "") != "fairtat-report-v1") {
    return "unrecognized report format";
  }

  // Rebuild config from the echo.
  ExperimentConfig config;
  for (const auto& [key, value] :
       report.at("config").get<std::map<std::string, std::string>>()) {
    if (value.empty() && key == "dataset.path") continue;
    if (value.empty() && (key == "eval.corruptions")) continue;
    config.set(key, value);
  }
  std::string report_dir = fs::path(report_path).parent_path().string();
  if (report_dir.empty()) report_dir = ".";

  Dataset train_data = build_dataset(config.dataset);
  Dataset eval_data = build_eval_dataset(config.dataset);

  for (const auto& seed_json : report.at("seeds")) {
    std::uint64_t seed = seed_json.at("seed").get<std::uint64_t>();

    // 1. Checkpoints reproduce every evaluation table.
    for (const auto& m : seed_json.at("models")) {
      std::string ck_path =
          report_dir + "/" + m.at("checkpoint").get<std::string>();
      Checkpoint ck = load_checkpoint(ck_path);
      ordered_json fresh = evaluate_model(ck.params, eval_data, config,
                                          m.at("model").get<std::string>());
      fresh["checkpoint"] = m.at("checkpoint");
      std::string r = compare_json(m, fresh, tol,
                                   "seed " + std::to_string(seed) + " model " +
                                       m.at("model").get<std::string>());
      if (!r.empty()) return r;
    }

    // 2. Config + seed reproduce the training history and the checkpoints.
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.verbose = false;
    TrainResult result = fair_tat_train(tc, train_data);
    ordered_json fresh_history = ordered_json::array();
    for (const EpochRecord& rec : result.history.epochs) {
      fresh_history.push_back(epoch_json(rec));
    }
    std::string r =
        compare_json(seed_json.at("history"), fresh_history, tol,
                     "seed " + std::to_string(seed) + " history");
    if (!r.empty()) return r;

    std::string ck_final_path =
        report_dir + "/" +
        seed_json.at("models")[0].at("checkpoint").get<std::string>();
    Checkpoint ck_final = load_checkpoint(ck_final_path);
    if (ck_final.params.checksum() != result.final_model.checksum()) {
      return "seed " + std::to_string(seed) +
             ": retrained final model differs from checkpoint";
    }
  }
  return "";
}

}  // namespace fairtat
