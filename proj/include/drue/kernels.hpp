#pragma once

#include <cstddef>

namespace drue::kernels {

// Two interchangeable kernel backends. Both run the same per-work-item worker
// functions; the parallel backend only distributes items across OpenMP
// threads, so results are bitwise identical to the serial reference for any
// thread count.
enum class Backend { serial, parallel };

void set_backend(Backend b);
Backend backend();
const char* backend_name();

// --- convolution ---------------------------------------------------------
// Feature maps are [C,H,W] row-major. Square kernels k in {1,3}; padding is
// k/2 (same-size for stride 1); stride in {1,2}.
// out must be [co, ho, wo] with ho = (h + 2*(k/2) - k)/stride + 1.

void conv2d_forward(const double* in, int ci, int h, int w, const double* wt,
                    const double* bias, int co, int k, int stride, double* out,
                    int ho, int wo);

// din is overwritten.
void conv2d_backward_input(const double* dout, int co, int ho, int wo,
                           const double* wt, int ci, int k, int stride,
                           double* din, int h, int w);

// dw [co,ci,k,k] and db [co] are accumulated into (+=).
void conv2d_backward_params(const double* dout, int co, int ho, int wo,
                            const double* in, int ci, int h, int w, int k,
                            int stride, double* dw, double* db);

// --- elementwise ----------------------------------------------------------
void relu_forward(const double* x, size_t n, double* y);
void relu_backward(const double* x, const double* dy, size_t n, double* dx);
void softplus_forward(const double* x, size_t n, double* y);
void softplus_backward(const double* x, const double* dy, size_t n, double* dx);
void sigmoid_forward(const double* x, size_t n, double* y);
// takes the forward output y
void sigmoid_backward(const double* y, const double* dy, size_t n, double* dx);
void add(const double* a, const double* b, size_t n, double* y);
void mul(const double* a, const double* b, size_t n, double* y);
void axpy(double a, const double* x, size_t n, double* y);  // y += a*x

// Adam update with externally computed bias corrections bc1 = 1-b1^t,
// bc2 = 1-b2^t.
void adam_step(double* p, const double* g, double* m, double* v, size_t n,
               double lr, double b1, double b2, double eps, double bc1,
               double bc2);

// --- resampling / pooling -------------------------------------------------
void upsample2x_forward(const double* in, int c, int h, int w, double* out);
void upsample2x_backward(const double* dout, int c, int h, int w, double* din);
void global_avg_pool_forward(const double* in, int c, int h, int w, double* out);
void global_avg_pool_backward(const double* dout, int c, int h, int w, double* din);

// --- fully connected ------------------------------------------------------
void linear_forward(const double* x, int ni, const double* w, const double* b,
                    int no, double* y);
// dx overwritten; dw/db accumulated.
void linear_backward(const double* x, const double* w, const double* dy, int ni,
                     int no, double* dx, double* dw, double* db);

}  // namespace drue::kernels
