#include "kernels_backends.hpp"
#include "kernels_detail.hpp"

// OpenMP driver: identical work items to the serial driver, distributed with
// schedule(static). Items never share output elements, so the result is
// bitwise equal to serial for any thread count.
namespace drue::kernels::parallel_impl {

using namespace drue::kernels::detail;

namespace {
inline long long chunk_count(size_t n) {
  return static_cast<long long>((n + kChunk - 1) / kChunk);
}
inline void chunk_bounds(long long j, size_t n, size_t& i0, size_t& i1) {
  i0 = static_cast<size_t>(j) * kChunk;
  i1 = i0 + kChunk < n ? i0 + kChunk : n;
}
}  // namespace

void conv2d_forward(const double* in, int ci, int h, int w, const double* wt,
                    const double* bias, int co, int k, int stride, double* out,
                    int ho, int wo) {
  const int pad = k / 2;
  const long long items = static_cast<long long>(co) * ho;
#pragma omp parallel for schedule(static)
  for (long long it = 0; it < items; ++it) {
    const int oc = static_cast<int>(it / ho);
    const int oy = static_cast<int>(it % ho);
    conv_fwd_row(in, ci, h, w, wt, bias, k, stride, pad, oc, oy, wo,
                 out + (static_cast<size_t>(oc) * ho + oy) * wo);
  }
}

void conv2d_backward_input(const double* dout, int co, int ho, int wo,
                           const double* wt, int ci, int k, int stride,
                           double* din, int h, int w) {
  const int pad = k / 2;
  const long long items = static_cast<long long>(ci) * h;
#pragma omp parallel for schedule(static)
  for (long long it = 0; it < items; ++it) {
    const int ic = static_cast<int>(it / h);
    const int iy = static_cast<int>(it % h);
    conv_bwd_input_row(dout, co, ho, wo, wt, ci, k, stride, pad, ic, iy, w,
                       din + (static_cast<size_t>(ic) * h + iy) * w);
  }
}

void conv2d_backward_params(const double* dout, int co, int ho, int wo,
                            const double* in, int ci, int h, int w, int k,
                            int stride, double* dw, double* db) {
  const int pad = k / 2;
  const long long items = static_cast<long long>(co) * ci;
#pragma omp parallel for schedule(static)
  for (long long it = 0; it < items; ++it) {
    const int oc = static_cast<int>(it / ci);
    const int ic = static_cast<int>(it % ci);
    conv_bwd_weight_slice(dout, ho, wo, in, h, w, ci, k, stride, pad, oc, ic,
                          dw);
  }
#pragma omp parallel for schedule(static)
  for (long long oc = 0; oc < co; ++oc)
    conv_bwd_bias_item(dout, ho, wo, static_cast<int>(oc), db);
}

void relu_forward(const double* x, size_t n, double* y) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    relu_fwd_span(x, i0, i1, y);
  }
}

void relu_backward(const double* x, const double* dy, size_t n, double* dx) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    relu_bwd_span(x, dy, i0, i1, dx);
  }
}

void softplus_forward(const double* x, size_t n, double* y) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    softplus_fwd_span(x, i0, i1, y);
  }
}

void softplus_backward(const double* x, const double* dy, size_t n,
                       double* dx) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    softplus_bwd_span(x, dy, i0, i1, dx);
  }
}

void sigmoid_forward(const double* x, size_t n, double* y) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    sigmoid_fwd_span(x, i0, i1, y);
  }
}

void sigmoid_backward(const double* y, const double* dy, size_t n, double* dx) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    sigmoid_bwd_span(y, dy, i0, i1, dx);
  }
}

void add(const double* a, const double* b, size_t n, double* y) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    add_span(a, b, i0, i1, y);
  }
}

void mul(const double* a, const double* b, size_t n, double* y) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    mul_span(a, b, i0, i1, y);
  }
}

void axpy(double a, const double* x, size_t n, double* y) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    axpy_span(a, x, i0, i1, y);
  }
}

void adam_step(double* p, const double* g, double* m, double* v, size_t n,
               double lr, double b1, double b2, double eps, double bc1,
               double bc2) {
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    adam_span(p, g, m, v, i0, i1, lr, b1, b2, eps, bc1, bc2);
  }
}

void upsample2x_forward(const double* in, int c, int h, int w, double* out) {
  const int ho = 2 * h, wo = 2 * w;
  const long long items = static_cast<long long>(c) * ho;
#pragma omp parallel for schedule(static)
  for (long long it = 0; it < items; ++it) {
    const int ch = static_cast<int>(it / ho);
    const int oy = static_cast<int>(it % ho);
    upsample_fwd_row(in, h, w, ch, oy,
                     out + (static_cast<size_t>(ch) * ho + oy) * wo);
  }
}

void upsample2x_backward(const double* dout, int c, int h, int w, double* din) {
  const long long items = static_cast<long long>(c) * h;
#pragma omp parallel for schedule(static)
  for (long long it = 0; it < items; ++it) {
    const int ch = static_cast<int>(it / h);
    const int iy = static_cast<int>(it % h);
    upsample_bwd_row(dout, h, w, ch, iy,
                     din + (static_cast<size_t>(ch) * h + iy) * w);
  }
}

void global_avg_pool_forward(const double* in, int c, int h, int w,
                             double* out) {
#pragma omp parallel for schedule(static)
  for (long long ch = 0; ch < c; ++ch)
    gap_fwd_item(in, h, w, static_cast<int>(ch), out);
}

void global_avg_pool_backward(const double* dout, int c, int h, int w,
                              double* din) {
#pragma omp parallel for schedule(static)
  for (long long ch = 0; ch < c; ++ch)
    gap_bwd_item(dout, h, w, static_cast<int>(ch), din);
}

void linear_forward(const double* x, int ni, const double* w, const double* b,
                    int no, double* y) {
#pragma omp parallel for schedule(static)
  for (long long o = 0; o < no; ++o)
    linear_fwd_item(x, ni, w, b, static_cast<int>(o), y);
}

void linear_backward(const double* x, const double* w, const double* dy, int ni,
                     int no, double* dx, double* dw, double* db) {
  const size_t n = static_cast<size_t>(ni);
  const long long nj = chunk_count(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nj; ++j) {
    size_t i0, i1;
    chunk_bounds(j, n, i0, i1);
    linear_bwd_dx_span(w, dy, ni, no, i0, i1, dx);
  }
#pragma omp parallel for schedule(static)
  for (long long o = 0; o < no; ++o)
    linear_bwd_dwdb_item(x, dy, ni, static_cast<int>(o), dw, db);
}

}  // namespace drue::kernels::parallel_impl
