#pragma once

#include <string>
#include <vector>

#include "fairtat/attacks.hpp"
#include "fairtat/model.hpp"

namespace fairtat {

struct Dataset;  // data.hpp

/// Per-sample (predicted, true) records for class-wise metrics.
struct PredLog {
  std::vector<int> preds;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return preds.size(); }
  void append(int pred, int label);
  void merge(const PredLog& other);

  // CSV with header `index,pred,label`.
  std::string to_csv() const;
  static PredLog from_csv(const std::string& csv, int num_classes);
};

// |correct| / N. Throws std::domain_error on an empty log.
double clean_accuracy(const PredLog& log);

// The paper's class-wise accuracy: (TP_j + TN_j) / N.
double class_accuracy(const PredLog& log, int c);

// |pred==c && label==c| / |label==c|; 0 when the class is absent.
double class_recall(const PredLog& log, int c);

std::vector<double> class_accuracy_all(const PredLog& log);
std::vector<double> class_recall_all(const PredLog& log);

// Class false-positive score: the class's share of all misclassifications.
// With zero misclassifications returns the uniform 1/K for every class, so
// the downstream sampling prior stays a valid distribution.
double cfps(const PredLog& log, int c);
std::vector<double> cfps_all(const PredLog& log);

struct WorstClassSummary {
  double min_value = 0.0;
  int argmin_class = -1;
  // Worst-class value for K <= 10; mean of the worst ceil(K/10) classes
  // beyond that.
  double worst_decile_mean = 0.0;
};
WorstClassSummary worst_class_summary(const std::vector<double>& per_class);

enum class AttackKind { none, fgsm, pgd_untargeted };

// Accuracy on attacked inputs, plus the attacked-prediction log. The result
// approximates the robust-accuracy definition with the named attack.
struct RobustEval {
  double accuracy = 0.0;
  PredLog log;
};
RobustEval robust_accuracy(const ModelParams& params, const Dataset& data,
                           const AttackConfig& attack, AttackKind kind,
                           Rng* rng = nullptr);

PredLog clean_predictions(const ModelParams& params, const Dataset& data);

}  // namespace fairtat
