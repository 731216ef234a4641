#include "fairtat/kernels.hpp"

#include <stdexcept>

namespace fairtat::kern {

namespace detail {
double dot_scalar(const double*, const double*, std::size_t);
void axpy_scalar(double, const double*, double*, std::size_t);
void scale_scalar(double, double*, std::size_t);
void add_scalar(const double*, const double*, double*, std::size_t);
void relu_scalar(const double*, double*, std::size_t);
void relu_grad_scalar(const double*, const double*, double*, std::size_t);
void clamp_scalar(double, double, double*, std::size_t);
void sign_step_scalar(const double*, const double*, double, double*,
                      std::size_t);
void project_box_scalar(const double*, const double*, double, double, double*,
                        std::size_t);

#ifdef FAIRTAT_HAVE_AVX2
double dot_avx2(const double*, const double*, std::size_t);
void axpy_avx2(double, const double*, double*, std::size_t);
void scale_avx2(double, double*, std::size_t);
void add_avx2(const double*, const double*, double*, std::size_t);
void relu_avx2(const double*, double*, std::size_t);
void relu_grad_avx2(const double*, const double*, double*, std::size_t);
void clamp_avx2(double, double, double*, std::size_t);
void sign_step_avx2(const double*, const double*, double, double*,
                    std::size_t);
void project_box_avx2(const double*, const double*, double, double, double*,
                      std::size_t);
#endif
}  // namespace detail

namespace {

constexpr KernelTable kScalarTable = {
    detail::dot_scalar,      detail::axpy_scalar,      detail::scale_scalar,
    detail::add_scalar,      detail::relu_scalar,      detail::relu_grad_scalar,
    detail::clamp_scalar,    detail::sign_step_scalar,
    detail::project_box_scalar,
};

#ifdef FAIRTAT_HAVE_AVX2
constexpr KernelTable kAvx2Table = {
    detail::dot_avx2,      detail::axpy_avx2,      detail::scale_avx2,
    detail::add_avx2,      detail::relu_avx2,      detail::relu_grad_avx2,
    detail::clamp_avx2,    detail::sign_step_avx2,
    detail::project_box_avx2,
};
#endif

Backend detect_backend() {
#ifdef FAIRTAT_HAVE_AVX2
  if (__builtin_cpu_supports("avx2")) return Backend::avx2;
#endif
  return Backend::scalar;
}

Backend g_backend = detect_backend();
const KernelTable* g_table = &table(g_backend);

}  // namespace

bool avx2_supported() {
#ifdef FAIRTAT_HAVE_AVX2
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported()) {
    throw std::runtime_error("kern::set_backend: AVX2 not available");
  }
  g_backend = b;
  g_table = &table(b);
}

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

const KernelTable& table(Backend b) {
#ifdef FAIRTAT_HAVE_AVX2
  if (b == Backend::avx2) return kAvx2Table;
#else
  if (b == Backend::avx2) {
    throw std::runtime_error("kern::table: AVX2 not compiled in");
  }
#endif
  return kScalarTable;
}

double dot(const double* a, const double* b, std::size_t n) {
  return g_table->dot(a, b, n);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  g_table->axpy(a, x, y, n);
}
void scale(double a, double* x, std::size_t n) { g_table->scale(a, x, n); }
void add(const double* a, const double* b, double* out, std::size_t n) {
  g_table->add(a, b, out, n);
}
void relu(const double* x, double* out, std::size_t n) {
  g_table->relu(x, out, n);
}
void relu_grad(const double* x, const double* g, double* dst, std::size_t n) {
  g_table->relu_grad(x, g, dst, n);
}
void clamp(double lo, double hi, double* x, std::size_t n) {
  g_table->clamp(lo, hi, x, n);
}
void sign_step(const double* x, const double* g, double alpha, double* out,
               std::size_t n) {
  g_table->sign_step(x, g, alpha, out, n);
}
void project_box(const double* center, const double* eps, double lo, double hi,
                 double* x, std::size_t n) {
  g_table->project_box(center, eps, lo, hi, x, n);
}

void gemm_nn(const double* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      g_table->axpy(A[i * k + p], B + p * n, C + i * n, n);
    }
  }
}

void gemm_nt(const double* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      C[i * n + j] += g_table->dot(A + i * k, B + j * k, k);
    }
  }
}

void gemm_tn(const double* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      g_table->axpy(A[i * k + p], B + i * n, C + p * n, n);
    }
  }
}

}  // namespace fairtat::kern
