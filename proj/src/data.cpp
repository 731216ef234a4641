#include "fairtat/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fairtat/kernels.hpp"

namespace fairtat {

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.split_tag = split_tag;
  std::size_t d = dim();
  out.features = Tensor({indices.size(), d});
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::size_t i = indices[r];
    if (i >= size()) throw std::out_of_range("Dataset::subset: index");
    std::copy_n(features.values.begin() + i * d, d,
                out.features.values.begin() + r * d);
    out.labels.push_back(labels[i]);
  }
  return out;
}

void Dataset::validate() const {
  if (features.shape.size() != 2 || features.shape[0] != labels.size()) {
    throw std::logic_error("Dataset: features/labels size mismatch");
  }
  std::vector<bool> seen(num_classes, false);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::domain_error("Dataset: label outside [0, K)");
    }
    seen[y] = true;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (!seen[c]) {
      throw std::domain_error("Dataset: class " + std::to_string(c) +
                              " has no samples");
    }
  }
  for (double v : features.values) {
    if (v < 0.0 || v > 1.0) {
      throw std::domain_error("Dataset: feature outside [0, 1]");
    }
  }
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  std::size_t d = dim();
  for (std::size_t i = 0; i < size(); ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < d; ++j) out << "," << features.at(i, j);
    out << "\n";
  }
  return out.str();
}

std::string corruption_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::gaussian_noise: return "gaussian_noise";
    case CorruptionKind::shot_noise: return "shot_noise";
    case CorruptionKind::impulse_noise: return "impulse_noise";
    case CorruptionKind::brightness: return "brightness";
    case CorruptionKind::contrast: return "contrast";
    case CorruptionKind::pixelate: return "pixelate";
  }
  throw std::logic_error("corruption_name: bad kind");
}

CorruptionKind corruption_from_name(const std::string& name) {
  for (CorruptionKind k :
       {CorruptionKind::gaussian_noise, CorruptionKind::shot_noise,
        CorruptionKind::impulse_noise, CorruptionKind::brightness,
        CorruptionKind::contrast, CorruptionKind::pixelate}) {
    if (corruption_name(k) == name) return k;
  }
  throw std::domain_error("unsupported corruption type: " + name +
                          " (implemented: gaussian_noise, shot_noise, "
                          "impulse_noise, brightness, contrast, pixelate)");
}

namespace {

// Min-max scale every feature column jointly to [0, 1].
void scale_to_unit(Tensor& features) {
  double lo = *std::min_element(features.values.begin(), features.values.end());
  double hi = *std::max_element(features.values.begin(), features.values.end());
  double span = hi - lo;
  if (span <= 0.0) span = 1.0;
  for (double& v : features.values) v = (v - lo) / span;
}

}  // namespace

Dataset make_three_class(std::size_t n_per_class, double separation_hard,
                         double separation_easy, double noise_std,
                         std::uint64_t seed) {
  if (separation_hard <= 0.0 || separation_easy <= 0.0) {
    throw std::domain_error("make_three_class: separations must be > 0");
  }
  if (noise_std <= 0.0) {
    throw std::domain_error("make_three_class: noise_std must be > 0");
  }
  if (n_per_class == 0) {
    throw std::domain_error("make_three_class: empty classes");
  }
  // Classes 0/1 sit separation_hard apart on the x axis; class 2 sits
  // separation_easy above their midpoint.
  double cx[3] = {-separation_hard / 2.0, separation_hard / 2.0, 0.0};
  double cy[3] = {0.0, 0.0, separation_easy};
  Rng rng(seed);
  Dataset data;
  data.num_classes = 3;
  data.features = Tensor({3 * n_per_class, 2});
  data.labels.resize(3 * n_per_class);
  std::size_t row = 0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
      data.features.at(row, 0) = cx[c] + rng.normal(0.0, noise_std);
      data.features.at(row, 1) = cy[c] + rng.normal(0.0, noise_std);
      data.labels[row] = c;
    }
  }
  scale_to_unit(data.features);
  data.split_tag = "three_class";
  return data;
}

Dataset make_blobs(int num_classes, std::size_t n_per_class, std::size_t dim,
                   double center_spread, double noise_std,
                   std::uint64_t seed) {
  if (num_classes < 2) throw std::domain_error("make_blobs: K must be >= 2");
  if (noise_std <= 0.0) {
    throw std::domain_error("make_blobs: noise_std must be > 0");
  }
  if (n_per_class == 0 || dim == 0) {
    throw std::domain_error("make_blobs: empty shape");
  }
  Rng rng(seed);
  std::vector<double> centers(static_cast<std::size_t>(num_classes) * dim);
  for (double& v : centers) v = rng.uniform(-center_spread, center_spread);
  Dataset data;
  data.num_classes = num_classes;
  std::size_t n = static_cast<std::size_t>(num_classes) * n_per_class;
  data.features = Tensor({n, dim});
  data.labels.resize(n);
  std::size_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
      for (std::size_t j = 0; j < dim; ++j) {
        data.features.at(row, j) =
            centers[static_cast<std::size_t>(c) * dim + j] +
            rng.normal(0.0, noise_std);
      }
      data.labels[row] = c;
    }
  }
  scale_to_unit(data.features);
  data.split_tag = "blobs";
  return data;
}

namespace {

constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPixels = 3072;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset load_cifar10(const std::string& dir, std::size_t subset_per_class,
                     std::uint64_t seed) {
  static const char* kBatches[] = {"data_batch_1.bin", "data_batch_2.bin",
                                   "data_batch_3.bin", "data_batch_4.bin",
                                   "data_batch_5.bin"};
  std::vector<std::uint8_t> raw;
  bool found = false;
  for (const char* name : kBatches) {
    std::string path = dir + "/" + name;
    if (std::ifstream(path).good()) {
      auto bytes = read_file(path);
      raw.insert(raw.end(), bytes.begin(), bytes.end());
      found = true;
    }
  }
  if (!found) {
    // Single-file layout (also used by the synthetic fixtures).
    raw = read_file(dir);
  }
  if (raw.size() % kCifarRecord != 0) {
    throw std::runtime_error(
        "load_cifar10: file size is not a multiple of 3073 bytes");
  }
  std::size_t n = raw.size() / kCifarRecord;
  Dataset data;
  data.num_classes = 10;
  data.features = Tensor({n, kCifarPixels});
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t label = raw[i * kCifarRecord];
    if (label > 9) {
      throw std::runtime_error("load_cifar10: label byte " +
                               std::to_string(int(label)) + " > 9 at record " +
                               std::to_string(i));
    }
    data.labels[i] = label;
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      data.features.at(i, j) = raw[i * kCifarRecord + 1 + j] / 255.0;
    }
  }
  data.split_tag = "cifar10";
  if (subset_per_class == 0) return data;

  // Deterministic per-class subsample: shuffle indices within each class.
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(10);
  for (std::size_t i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  std::vector<std::size_t> keep;
  for (auto& idxs : by_class) {
    std::shuffle(idxs.begin(), idxs.end(), rng.engine());
    std::size_t take = std::min(subset_per_class, idxs.size());
    keep.insert(keep.end(), idxs.begin(), idxs.begin() + take);
  }
  std::sort(keep.begin(), keep.end());
  return data.subset(keep);
}

std::vector<std::uint8_t> encode_cifar10_record(const Dataset& data,
                                                std::size_t index) {
  if (data.dim() != kCifarPixels) {
    throw std::logic_error("encode_cifar10_record: features are not 3072-d");
  }
  std::vector<std::uint8_t> rec(kCifarRecord);
  rec[0] = static_cast<std::uint8_t>(data.labels[index]);
  for (std::size_t j = 0; j < kCifarPixels; ++j) {
    rec[1 + j] =
        static_cast<std::uint8_t>(std::lround(data.features.at(index, j) * 255.0));
  }
  return rec;
}

void write_cifar10_batch(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_cifar10_batch: cannot open " + path);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto rec = encode_cifar10_record(data, i);
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size()));
  }
}

double gaussian_noise_sigma(int severity) {
  static const double table[6] = {0.0, 0.04, 0.08, 0.12, 0.18, 0.26};
  return table[severity];
}

double impulse_noise_fraction(int severity) {
  static const double table[6] = {0.0, 0.02, 0.05, 0.10, 0.17, 0.27};
  return table[severity];
}

namespace {

double shot_noise_photons(int severity) {
  static const double table[6] = {0.0, 500.0, 250.0, 100.0, 50.0, 25.0};
  return table[severity];
}

double brightness_delta(int severity) {
  static const double table[6] = {0.0, 0.05, 0.10, 0.15, 0.22, 0.30};
  return table[severity];
}

double contrast_factor(int severity) {
  static const double table[6] = {1.0, 0.75, 0.55, 0.40, 0.30, 0.20};
  return table[severity];
}

std::size_t pixelate_block(int severity) {
  static const std::size_t table[6] = {1, 2, 4, 8, 10, 16};
  return table[severity];
}

}  // namespace

Dataset corrupt(const Dataset& data, const CorruptionSpec& spec,
                std::uint64_t seed) {
  if (spec.severity < 0 || spec.severity > 5) {
    throw std::domain_error("corrupt: severity must be in 0..5");
  }
  Dataset out = data;
  out.split_tag = data.split_tag + "+" + corruption_name(spec.kind) + "@" +
                  std::to_string(spec.severity);
  if (spec.severity == 0) return out;
  Rng rng(seed);
  auto& v = out.features.values;
  switch (spec.kind) {
    case CorruptionKind::gaussian_noise: {
      double sigma = gaussian_noise_sigma(spec.severity);
      for (double& x : v) x += rng.normal(0.0, sigma);
      break;
    }
    case CorruptionKind::shot_noise: {
      double photons = shot_noise_photons(spec.severity);
      for (double& x : v) {
        std::poisson_distribution<long> pois(std::max(x, 0.0) * photons);
        x = static_cast<double>(pois(rng.engine())) / photons;
      }
      break;
    }
    case CorruptionKind::impulse_noise: {
      double frac = impulse_noise_fraction(spec.severity);
      for (double& x : v) {
        if (rng.uniform(0.0, 1.0) < frac) {
          x = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
        }
      }
      break;
    }
    case CorruptionKind::brightness: {
      double delta = brightness_delta(spec.severity);
      for (double& x : v) x += delta;
      break;
    }
    case CorruptionKind::contrast: {
      double f = contrast_factor(spec.severity);
      std::size_t d = out.dim();
      for (std::size_t i = 0; i < out.size(); ++i) {
        double* row = v.data() + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
          row[j] = mean + f * (row[j] - mean);
        }
      }
      break;
    }
    case CorruptionKind::pixelate: {
      if (out.dim() != kCifarPixels) {
        throw std::domain_error(
            "corrupt: pixelate requires 32x32x3 image features");
      }
      std::size_t block = pixelate_block(spec.severity);
      // Downsample by block averaging, then nearest-neighbor upsample.
      // Layout is channel-planar: 3 planes of 32x32, row-major.
      for (std::size_t i = 0; i < out.size(); ++i) {
        double* img = v.data() + i * kCifarPixels;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          double* plane = img + ch * 1024;
          for (std::size_t by = 0; by < 32; by += block) {
            for (std::size_t bx = 0; bx < 32; bx += block) {
              double sum = 0.0;
              std::size_t cnt = 0;
              for (std::size_t y = by; y < std::min(by + block, std::size_t(32));
                   ++y) {
                for (std::size_t x = bx;
                     x < std::min(bx + block, std::size_t(32)); ++x) {
                  sum += plane[y * 32 + x];
                  ++cnt;
                }
              }
              double avg = sum / static_cast<double>(cnt);
              for (std::size_t y = by; y < std::min(by + block, std::size_t(32));
                   ++y) {
                for (std::size_t x = bx;
                     x < std::min(bx + block, std::size_t(32)); ++x) {
                  plane[y * 32 + x] = avg;
                }
              }
            }
          }
        }
      }
      break;
    }
  }
  kern::clamp(0.0, 1.0, v.data(), v.size());
  return out;
}

}  // namespace fairtat
