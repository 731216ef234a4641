#include "fairtat/kernels.hpp"

#include <algorithm>

// Scalar reference kernels. The lane-4 accumulation in dot() mirrors the
// AVX2 register layout exactly so both backends reduce in the same order.

namespace fairtat::kern::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += a[i] * b[i];
    acc[1] += a[i + 1] * b[i + 1];
    acc[2] += a[i + 2] * b[i + 2];
    acc[3] += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void relu_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_scalar(const double* x, const double* g, double* dst,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) dst[i] += g[i];
  }
}

void clamp_scalar(double lo, double hi, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

void sign_step_scalar(const double* x, const double* g, double alpha,
                      double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    out[i] = x[i] + alpha * s;
  }
}

void project_box_scalar(const double* center, const double* eps, double lo,
                        double hi, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - center[i];
    d = std::min(std::max(d, -eps[i]), eps[i]);
    double r = nudge_into_ball(center[i] + d, center[i], eps[i]);
    x[i] = std::min(std::max(r, lo), hi);
  }
}

}  // namespace fairtat::kern::detail
