#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairtat/rng.hpp"
#include "fairtat/tensor.hpp"

namespace fairtat {

struct Dataset {
  Tensor features;  // [N x D], values in [0, 1]
  std::vector<int> labels;
  int num_classes = 0;
  std::string split_tag;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  Dataset subset(const std::vector<std::size_t>& indices) const;
  void validate() const;

  // CSV rows `label,f0,f1,...`.
  std::string to_csv() const;
};

enum class CorruptionKind {
  gaussian_noise,
  shot_noise,
  impulse_noise,
  brightness,
  contrast,
  pixelate,
};

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 1;  // 1..5; 0 means identity (below scale)
};

std::string corruption_name(CorruptionKind kind);
CorruptionKind corruption_from_name(const std::string& name);

// The three-class latent scenario: classes 0 and 1 form a hard pair
// separated by `separation_hard`; class 2 sits `separation_easy` away from
// both. 2-D Gaussians, min-max scaled to [0, 1], balanced.
Dataset make_three_class(std::size_t n_per_class, double separation_hard,
                         double separation_easy, double noise_std,
                         std::uint64_t seed);

// Gaussian blobs around uniformly drawn centers.
Dataset make_blobs(int num_classes, std::size_t n_per_class, std::size_t dim,
                   double center_spread, double noise_std, std::uint64_t seed);

// Standard CIFAR-10 binary batches (1 label byte + 3072 pixel bytes per
// record). Pixels scale to [0, 1] as flat 3072-d features. subset_per_class=0
// keeps everything.
Dataset load_cifar10(const std::string& dir, std::size_t subset_per_class,
                     std::uint64_t seed);

// Re-encodes one loaded record into its 3073-byte form.
std::vector<std::uint8_t> encode_cifar10_record(const Dataset& data,
                                                std::size_t index);

// Writes a dataset into CIFAR-10 binary batch format (used by tests and the
// synthetic corruption benchmark). Features must be 3072-d.
void write_cifar10_batch(const Dataset& data, const std::string& path);

// Label-preserving corruption at the given severity; output re-clamped to
// [0, 1]. Severity 0 is the identity. pixelate expects 32x32x3 features.
Dataset corrupt(const Dataset& data, const CorruptionSpec& spec,
                std::uint64_t seed);

// Severity parameter tables, exposed for reports.
double gaussian_noise_sigma(int severity);
double impulse_noise_fraction(int severity);

}  // namespace fairtat
