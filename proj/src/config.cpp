#include "fairtat/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fairtat {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::runtime_error("expected boolean, got '" + s + "'");
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

}  // namespace

double parse_value_or_fraction(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    double num = std::stod(s.substr(0, slash));
    double den = std::stod(s.substr(slash + 1));
    if (den == 0.0) throw std::runtime_error("division by zero in '" + s + "'");
    return num / den;
  }
  return std::stod(s);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset.kind") {
    if (value != "three_class" && value != "blobs" && value != "cifar10") {
      throw std::runtime_error("dataset.kind must be three_class, blobs or "
                               "cifar10, got '" + value + "'");
    }
    dataset.kind = value;
  } else if (key == "dataset.seed") {
    dataset.seed = std::stoull(value);
  } else if (key == "dataset.n_per_class") {
    dataset.n_per_class = std::stoull(value);
  } else if (key == "dataset.separation_hard") {
    dataset.separation_hard = parse_value_or_fraction(value);
  } else if (key == "dataset.separation_easy") {
    dataset.separation_easy = parse_value_or_fraction(value);
  } else if (key == "dataset.noise_std") {
    dataset.noise_std = parse_value_or_fraction(value);
  } else if (key == "dataset.num_classes") {
    dataset.num_classes = std::stoi(value);
  } else if (key == "dataset.dim") {
    dataset.dim = std::stoull(value);
  } else if (key == "dataset.center_spread") {
    dataset.center_spread = parse_value_or_fraction(value);
  } else if (key == "dataset.path") {
    dataset.path = value;
  } else if (key == "dataset.subset_per_class") {
    dataset.subset_per_class = std::stoull(value);
  } else if (key == "train.epochs") {
    train.epochs = std::stoull(value);
  } else if (key == "train.batch_size") {
    train.batch_size = std::stoull(value);
  } else if (key == "train.hidden_dims") {
    train.hidden_dims.clear();
    for (const auto& item : split_list(value)) {
      train.hidden_dims.push_back(std::stoull(item));
    }
  } else if (key == "train.lr") {
    train.sgd.learning_rate = parse_value_or_fraction(value);
  } else if (key == "train.momentum") {
    train.sgd.momentum = parse_value_or_fraction(value);
  } else if (key == "train.weight_decay") {
    train.sgd.weight_decay = parse_value_or_fraction(value);
  } else if (key == "train.lr_schedule") {
    train.sgd.lr_schedule.clear();
    for (const auto& item : split_list(value)) {
      auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw std::runtime_error(
            "train.lr_schedule entries are fraction:divisor, got '" + item +
            "'");
      }
      train.sgd.lr_schedule.emplace_back(
          parse_value_or_fraction(item.substr(0, colon)),
          parse_value_or_fraction(item.substr(colon + 1)));
    }
  } else if (key == "train.epsilon") {
    train.attack.epsilon = parse_value_or_fraction(value);
  } else if (key == "train.step_size") {
    train.attack.step_size = parse_value_or_fraction(value);
  } else if (key == "train.num_steps") {
    train.attack.num_steps = std::stoull(value);
  } else if (key == "train.random_start") {
    train.attack.random_start = parse_bool(value);
  } else if (key == "train.lambda1") {
    train.lambda1 = parse_value_or_fraction(value);
  } else if (key == "train.prior") {
    if (value == "cfps") {
      train.prior_kind = PriorKind::cfps_prior;
    } else if (value == "uniform") {
      train.prior_kind = PriorKind::uniform;
    } else {
      throw std::runtime_error("train.prior must be cfps or uniform");
    }
  } else if (key == "train.averaging") {
    if (value == "none") {
      train.averaging.kind = AveragingKind::none;
    } else if (value == "ema") {
      train.averaging.kind = AveragingKind::ema;
    } else if (value == "fawa") {
      train.averaging.kind = AveragingKind::fawa;
    } else {
      throw std::runtime_error("train.averaging must be none, ema or fawa");
    }
  } else if (key == "train.avg_alpha") {
    train.averaging.alpha = parse_value_or_fraction(value);
  } else if (key == "train.avg_start_epoch") {
    if (value == "half") {
      train.averaging.start_epoch = AveragingConfig::kStartAtHalf;
    } else {
      train.averaging.start_epoch = std::stoull(value);
    }
  } else if (key == "train.fairness_threshold") {
    train.averaging.fairness_threshold = parse_value_or_fraction(value);
  } else if (key == "train.loss") {
    if (value == "cross_entropy") {
      train.loss_kind = LossKind::cross_entropy;
    } else if (value == "trades") {
      train.loss_kind = LossKind::trades;
    } else {
      throw std::runtime_error("train.loss must be cross_entropy or trades");
    }
  } else if (key == "train.trades_beta") {
    train.trades_beta = parse_value_or_fraction(value);
  } else if (key == "train.mode") {
    if (value == "fair_tat") {
      train.mode = TrainMode::fair_tat;
    } else if (value == "untargeted_at") {
      train.mode = TrainMode::untargeted_at;
    } else {
      throw std::runtime_error(
          "train.mode must be fair_tat or untargeted_at, got '" + value + "'");
    }
  } else if (key == "train.valid_fraction") {
    train.valid_fraction = parse_value_or_fraction(value);
  } else if (key == "train.prior_per_batch") {
    train.prior_per_batch = parse_bool(value);
  } else if (key == "train.cfps_source") {
    if (value == "adversarial") {
      train.cfps_source = CfpsSource::adversarial;
    } else if (value == "clean") {
      train.cfps_source = CfpsSource::clean;
    } else {
      throw std::runtime_error("train.cfps_source must be adversarial or clean");
    }
  } else if (key == "train.eps_keying") {
    if (value == "ground_truth") {
      train.eps_keying = EpsKeying::ground_truth;
    } else if (value == "target") {
      train.eps_keying = EpsKeying::target;
    } else {
      throw std::runtime_error(
          "train.eps_keying must be ground_truth or target");
    }
  } else if (key == "train.verbose") {
    train.verbose = parse_bool(value);
  } else if (key == "eval.epsilons") {
    eval.epsilons.clear();
    for (const auto& item : split_list(value)) {
      eval.epsilons.push_back(parse_value_or_fraction(item));
    }
  } else if (key == "eval.num_steps") {
    eval.num_steps = std::stoull(value);
  } else if (key == "eval.step_size") {
    eval.step_size = parse_value_or_fraction(value);
  } else if (key == "eval.corruptions") {
    eval.corruptions.clear();
    for (const auto& item : split_list(value)) {
      eval.corruptions.push_back(corruption_from_name(item));
    }
  } else if (key == "eval.severities") {
    eval.severities.clear();
    for (const auto& item : split_list(value)) {
      eval.severities.push_back(std::stoi(item));
    }
  } else if (key == "output.dir") {
    output_dir = value;
  } else if (key == "run.seeds") {
    seeds.clear();
    for (const auto& item : split_list(value)) {
      seeds.push_back(std::stoull(item));
    }
  } else {
    throw std::runtime_error("unknown config key '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected 'section.key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      config.set(key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               " (" + key + "): " + e.what());
    }
  }
  return config;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ExperimentConfig::validate() const {
  train.validate();
  if (seeds.empty()) {
    throw std::runtime_error("ExperimentConfig: at least one seed required");
  }
  if (eval.epsilons.empty()) {
    throw std::runtime_error(
        "ExperimentConfig: eval.epsilons must be explicit");
  }
  for (int s : eval.severities) {
    if (s < 0 || s > 5) {
      throw std::runtime_error("ExperimentConfig: severity outside 0..5");
    }
  }
  if (dataset.kind == "cifar10" && dataset.path.empty()) {
    throw std::runtime_error("ExperimentConfig: dataset.path required for "
                             "cifar10");
  }
}

std::map<std::string, std::string> ExperimentConfig::resolved() const {
  std::map<std::string, std::string> m;
  m["dataset.kind"] = dataset.kind;
  m["dataset.seed"] = std::to_string(dataset.seed);
  m["dataset.n_per_class"] = std::to_string(dataset.n_per_class);
  m["dataset.separation_hard"] = fmt(dataset.separation_hard);
  m["dataset.separation_easy"] = fmt(dataset.separation_easy);
  m["dataset.noise_std"] = fmt(dataset.noise_std);
  m["dataset.num_classes"] = std::to_string(dataset.num_classes);
  m["dataset.dim"] = std::to_string(dataset.dim);
  m["dataset.center_spread"] = fmt(dataset.center_spread);
  m["dataset.path"] = dataset.path;
  m["dataset.subset_per_class"] = std::to_string(dataset.subset_per_class);
  m["train.epochs"] = std::to_string(train.epochs);
  m["train.batch_size"] = std::to_string(train.batch_size);
  {
    std::vector<std::string> dims;
    for (auto d : train.hidden_dims) dims.push_back(std::to_string(d));
    m["train.hidden_dims"] = join(dims);
  }
  m["train.lr"] = fmt(train.sgd.learning_rate);
  m["train.momentum"] = fmt(train.sgd.momentum);
  m["train.weight_decay"] = fmt(train.sgd.weight_decay);
  {
    std::vector<std::string> sched;
    for (const auto& [f, d] : train.sgd.lr_schedule) {
      sched.push_back(fmt(f) + ":" + fmt(d));
    }
    m["train.lr_schedule"] = join(sched);
  }
  m["train.epsilon"] = fmt(train.attack.epsilon);
  m["train.step_size"] = fmt(train.attack.step_size);
  m["train.num_steps"] = std::to_string(train.attack.num_steps);
  m["train.random_start"] = train.attack.random_start ? "true" : "false";
  m["train.lambda1"] = fmt(train.lambda1);
  m["train.prior"] =
      train.prior_kind == PriorKind::cfps_prior ? "cfps" : "uniform";
  m["train.averaging"] = train.averaging.kind == AveragingKind::none  ? "none"
                         : train.averaging.kind == AveragingKind::ema ? "ema"
                                                                      : "fawa";
  m["train.avg_alpha"] = fmt(train.averaging.alpha);
  m["train.avg_start_epoch"] =
      train.averaging.start_epoch == AveragingConfig::kStartAtHalf
          ? "half"
          : std::to_string(train.averaging.start_epoch);
  m["train.fairness_threshold"] = fmt(train.averaging.fairness_threshold);
  m["train.loss"] =
      train.loss_kind == LossKind::cross_entropy ? "cross_entropy" : "trades";
  m["train.trades_beta"] = fmt(train.trades_beta);
  m["train.mode"] =
      train.mode == TrainMode::fair_tat ? "fair_tat" : "untargeted_at";
  m["train.valid_fraction"] = fmt(train.valid_fraction);
  m["train.prior_per_batch"] = train.prior_per_batch ? "true" : "false";
  m["train.cfps_source"] =
      train.cfps_source == CfpsSource::adversarial ? "adversarial" : "clean";
  m["train.eps_keying"] =
      train.eps_keying == EpsKeying::ground_truth ? "ground_truth" : "target";
  m["train.verbose"] = train.verbose ? "true" : "false";
  {
    std::vector<std::string> eps;
    for (double e : eval.epsilons) eps.push_back(fmt(e));
    m["eval.epsilons"] = join(eps);
  }
  m["eval.num_steps"] = std::to_string(eval.num_steps);
  m["eval.step_size"] = fmt(eval.step_size);
  {
    std::vector<std::string> kinds;
    for (auto k : eval.corruptions) kinds.push_back(corruption_name(k));
    m["eval.corruptions"] = join(kinds);
  }
  {
    std::vector<std::string> sevs;
    for (int s : eval.severities) sevs.push_back(std::to_string(s));
    m["eval.severities"] = join(sevs);
  }
  m["output.dir"] = output_dir;
  {
    std::vector<std::string> ss;
    for (auto s : seeds) ss.push_back(std::to_string(s));
    m["run.seeds"] = join(ss);
  }
  return m;
}

Dataset build_dataset(const DatasetConfig& config) {
  if (config.kind == "three_class") {
    return make_three_class(config.n_per_class, config.separation_hard,
                            config.separation_easy, config.noise_std,
                            config.seed);
  }
  if (config.kind == "blobs") {
    return make_blobs(config.num_classes, config.n_per_class, config.dim,
                      config.center_spread, config.noise_std, config.seed);
  }
  if (config.kind == "cifar10") {
    return load_cifar10(config.path, config.subset_per_class, config.seed);
  }
  throw std::runtime_error("build_dataset: unknown kind '" + config.kind +
                           "'");
}

Dataset build_eval_dataset(const DatasetConfig& config) {
  if (config.kind == "cifar10") return build_dataset(config);
  DatasetConfig held_out = config;
  held_out.seed = config.seed ^ 0xE7A1ULL;
  Dataset data = build_dataset(held_out);
  data.split_tag = "eval";
  return data;
}

}  // namespace fairtat
