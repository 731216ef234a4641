#include "fairtat/kernels.hpp"

#ifdef FAIRTAT_HAVE_AVX2

#include <immintrin.h>

#include <algorithm>

// AVX2 variants. Multiply and add stay separate (no FMA) and the horizontal
// reduction matches the scalar lane-4 order, so results are bit-identical to
// the reference kernels.

namespace fairtat::kern::detail {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(a + i);
    __m256d vb = _mm256_loadu_pd(b + i);
    vacc = _mm256_add_pd(vacc, _mm256_mul_pd(va, vb));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vacc);
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  }
  for (; i < n; ++i) x[i] *= a;
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void relu_avx2(const double* x, double* out, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx2(const double* x, const double* g, double* dst,
                    std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d mask = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
    __m256d vg = _mm256_and_pd(_mm256_loadu_pd(g + i), mask);
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), vg));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0) dst[i] += g[i];
  }
}

void clamp_avx2(double lo, double hi, double* x, std::size_t n) {
  __m256d vlo = _mm256_set1_pd(lo);
  __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(x + i, _mm256_min_pd(_mm256_max_pd(v, vlo), vhi));
  }
  for (; i < n; ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

void sign_step_avx2(const double* x, const double* g, double alpha,
                    double* out, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  __m256d one = _mm256_set1_pd(1.0);
  __m256d neg_one = _mm256_set1_pd(-1.0);
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vg = _mm256_loadu_pd(g + i);
    __m256d pos = _mm256_and_pd(_mm256_cmp_pd(vg, zero, _CMP_GT_OQ), one);
    __m256d neg = _mm256_and_pd(_mm256_cmp_pd(vg, zero, _CMP_LT_OQ), neg_one);
    __m256d s = _mm256_add_pd(pos, neg);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(out + i, _mm256_add_pd(vx, _mm256_mul_pd(va, s)));
  }
  for (; i < n; ++i) {
    double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    out[i] = x[i] + alpha * s;
  }
}

void project_box_avx2(const double* center, const double* eps, double lo,
                      double hi, double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vc = _mm256_loadu_pd(center + i);
    __m256d ve = _mm256_loadu_pd(eps + i);
    __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vc);
    d = _mm256_min_pd(_mm256_max_pd(d, _mm256_xor_pd(ve, sign_mask)), ve);
    __m256d v = _mm256_add_pd(vc, d);
    _mm256_storeu_pd(x + i, v);
    // scalar epilogue: the ulp nudge is branchy and almost never taken
    for (std::size_t l = i; l < i + 4; ++l) {
      double r = nudge_into_ball(x[l], center[l], eps[l]);
      x[l] = std::min(std::max(r, lo), hi);
    }
  }
  for (; i < n; ++i) {
    double d = x[i] - center[i];
    d = std::min(std::max(d, -eps[i]), eps[i]);
    double r = nudge_into_ball(center[i] + d, center[i], eps[i]);
    x[i] = std::min(std::max(r, lo), hi);
  }
}

}  // namespace fairtat::kern::detail

#endif  // FAIRTAT_HAVE_AVX2
