#include "fairtat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fairtat/data.hpp"

namespace fairtat {

void PredLog::append(int pred, int label) {
  if (pred < 0 || pred >= num_classes || label < 0 || label >= num_classes) {
    throw std::domain_error("PredLog: class outside [0, K)");
  }
  preds.push_back(pred);
  labels.push_back(label);
}

void PredLog::merge(const PredLog& other) {
  if (other.num_classes != num_classes) {
    throw std::logic_error("PredLog::merge: class count mismatch");
  }
  preds.insert(preds.end(), other.preds.begin(), other.preds.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

std::string PredLog::to_csv() const {
  std::ostringstream out;
  out << "index,pred,label\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << i << "," << preds[i] << "," << labels[i] << "\n";
  }
  return out.str();
}

PredLog PredLog::from_csv(const std::string& csv, int num_classes) {
  PredLog log;
  log.num_classes = num_classes;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "index,pred,label") {
    throw std::runtime_error("PredLog::from_csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::runtime_error("PredLog::from_csv: malformed row: " + line);
    }
    log.append(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)),
               std::stoi(line.substr(c2 + 1)));
  }
  return log;
}

namespace {

void require_nonempty(const PredLog& log, const char* op) {
  if (log.size() == 0) {
    throw std::domain_error(std::string(op) + ": empty prediction log");
  }
}

}  // namespace

double clean_accuracy(const PredLog& log) {
  require_nonempty(log, "clean_accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.preds[i] == log.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(log.size());
}

double class_accuracy(const PredLog& log, int c) {
  require_nonempty(log, "class_accuracy");
  std::size_t tp = 0, tn = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    bool pred_c = log.preds[i] == c;
    bool label_c = log.labels[i] == c;
    if (pred_c && label_c) ++tp;
    if (!pred_c && !label_c) ++tn;
  }
  return static_cast<double>(tp + tn) / static_cast<double>(log.size());
}

double class_recall(const PredLog& log, int c) {
  require_nonempty(log, "class_recall");
  std::size_t tp = 0, total = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.labels[i] == c) {
      ++total;
      if (log.preds[i] == c) ++tp;
    }
  }
  return total == 0 ? 0.0
                    : static_cast<double>(tp) / static_cast<double>(total);
}

std::vector<double> class_accuracy_all(const PredLog& log) {
  std::vector<double> out(log.num_classes);
  for (int c = 0; c < log.num_classes; ++c) out[c] = class_accuracy(log, c);
  return out;
}

std::vector<double> class_recall_all(const PredLog& log) {
  std::vector<double> out(log.num_classes);
  for (int c = 0; c < log.num_classes; ++c) out[c] = class_recall(log, c);
  return out;
}

std::vector<double> cfps_all(const PredLog& log) {
  require_nonempty(log, "cfps");
  std::vector<std::size_t> fp(log.num_classes, 0);
  std::size_t total_mis = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.preds[i] != log.labels[i]) {
      ++fp[log.preds[i]];
      ++total_mis;
    }
  }
  std::vector<double> out(log.num_classes);
  if (total_mis == 0) {
    std::fill(out.begin(), out.end(),
              1.0 / static_cast<double>(log.num_classes));
  } else {
    for (int c = 0; c < log.num_classes; ++c) {
      out[c] = static_cast<double>(fp[c]) / static_cast<double>(total_mis);
    }
  }
  return out;
}

double cfps(const PredLog& log, int c) { return cfps_all(log)[c]; }

WorstClassSummary worst_class_summary(const std::vector<double>& per_class) {
  if (per_class.empty()) {
    throw std::domain_error("worst_class_summary: empty list");
  }
  WorstClassSummary s;
  auto it = std::min_element(per_class.begin(), per_class.end());
  s.min_value = *it;
  s.argmin_class = static_cast<int>(it - per_class.begin());
  std::size_t k = per_class.size();
  std::size_t worst_count =
      k <= 10 ? 1 : static_cast<std::size_t>(std::ceil(k / 10.0));
  std::vector<double> sorted = per_class;
  std::sort(sorted.begin(), sorted.end());
  s.worst_decile_mean =
      std::accumulate(sorted.begin(), sorted.begin() + worst_count, 0.0) /
      static_cast<double>(worst_count);
  return s;
}

PredLog clean_predictions(const ModelParams& params, const Dataset& data) {
  PredLog log;
  log.num_classes = data.num_classes;
  log.preds = model_predict(params, data.features);
  log.labels = data.labels;
  return log;
}

RobustEval robust_accuracy(const ModelParams& params, const Dataset& data,
                           const AttackConfig& attack, AttackKind kind,
                           Rng* rng) {
  if (data.size() == 0) {
    throw std::domain_error("robust_accuracy: empty dataset");
  }
  Tensor attacked;
  switch (kind) {
    case AttackKind::none:
      attacked = data.features;
      break;
    case AttackKind::fgsm:
      attacked = fgsm(params, data.features, data.labels, attack).perturbed;
      break;
    case AttackKind::pgd_untargeted:
      attacked =
          pgd_untargeted(params, data.features, data.labels, attack, rng)
              .perturbed;
      break;
  }
  RobustEval eval;
  eval.log.num_classes = data.num_classes;
  eval.log.preds = model_predict(params, attacked);
  eval.log.labels = data.labels;
  eval.accuracy = clean_accuracy(eval.log);
  return eval;
}

}  // namespace fairtat
