#pragma once

#include <cmath>
#include <cstddef>
#include <string>

// Data-parallel inner loops used by the tensor and attack code. Every kernel
// has a scalar reference implementation and, on x86-64 with AVX2, a vectorized
// variant selected at runtime. Both variants follow the same lane-4
// accumulation order and use separate multiply/add (no FMA), so their results
// are bit-identical; the equivalence tests assert exact equality.

namespace fairtat::kern {

enum class Backend { scalar, avx2 };

bool avx2_supported();
Backend active_backend();
// Throws std::runtime_error when the requested backend is not available.
void set_backend(Backend b);
std::string backend_name(Backend b);

// sum_i a[i]*b[i], lane-4 accumulation order.
double dot(const double* a, const double* b, std::size_t n);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// x[i] *= a
void scale(double a, double* x, std::size_t n);

// out[i] = a[i] + b[i]
void add(const double* a, const double* b, double* out, std::size_t n);

// out[i] = max(x[i], 0)
void relu(const double* x, double* out, std::size_t n);

// dst[i] += g[i] * (x[i] > 0 ? 1 : 0)
void relu_grad(const double* x, const double* g, double* dst, std::size_t n);

// x[i] = min(max(x[i], lo), hi)
void clamp(double lo, double hi, double* x, std::size_t n);

// out[i] = x[i] + alpha * sign(g[i]), with sign(0) = 0
void sign_step(const double* x, const double* g, double alpha, double* out,
               std::size_t n);

// x[i] = clamp(center[i] + clip(x[i] - center[i], -eps[i], +eps[i]), lo, hi)
void project_box(const double* center, const double* eps, double lo, double hi,
                 double* x, std::size_t n);

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(const double* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n);

// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(const double* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n);

// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn(const double* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n);

// Implementation tables, exposed so the equivalence tests can drive one
// backend explicitly.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*relu)(const double*, double*, std::size_t);
  void (*relu_grad)(const double*, const double*, double*, std::size_t);
  void (*clamp)(double, double, double*, std::size_t);
  void (*sign_step)(const double*, const double*, double, double*,
                    std::size_t);
  void (*project_box)(const double*, const double*, double, double, double*,
                      std::size_t);
};

const KernelTable& table(Backend b);

namespace detail {

// center + clipped-delta can round to a value whose recomputed difference
// from center exceeds eps by one ulp; nudge it back so |r - center| <= eps
// holds exactly under recomputation. Shared by both backends.
inline double nudge_into_ball(double r, double center, double eps) {
  while (r - center > eps) r = std::nextafter(r, center);
  while (center - r > eps) r = std::nextafter(r, center);
  return r;
}

}  // namespace detail

}  // namespace fairtat::kern
