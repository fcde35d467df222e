#pragma once

#include <cstddef>

// The two drivers. Signatures match the public API in drue/kernels.hpp; the
// dispatcher in kernels.cpp picks one namespace per call.
#define DRUE_DECLARE_BACKEND(ns)                                               \
  namespace drue::kernels::ns {                                                \
  void conv2d_forward(const double* in, int ci, int h, int w,                  \
                      const double* wt, const double* bias, int co, int k,     \
                      int stride, double* out, int ho, int wo);                \
  void conv2d_backward_input(const double* dout, int co, int ho, int wo,       \
                             const double* wt, int ci, int k, int stride,      \
                             double* din, int h, int w);                       \
  void conv2d_backward_params(const double* dout, int co, int ho, int wo,      \
                              const double* in, int ci, int h, int w, int k,   \
                              int stride, double* dw, double* db);             \
  void relu_forward(const double* x, size_t n, double* y);                     \
  void relu_backward(const double* x, const double* dy, size_t n, double* dx); \
  void softplus_forward(const double* x, size_t n, double* y);                 \
  void softplus_backward(const double* x, const double* dy, size_t n,          \
                         double* dx);                                          \
  void sigmoid_forward(const double* x, size_t n, double* y);                  \
  void sigmoid_backward(const double* y, const double* dy, size_t n,           \
                        double* dx);                                           \
  void add(const double* a, const double* b, size_t n, double* y);             \
  void mul(const double* a, const double* b, size_t n, double* y);             \
  void axpy(double a, const double* x, size_t n, double* y);                   \
  void adam_step(double* p, const double* g, double* m, double* v, size_t n,   \
                 double lr, double b1, double b2, double eps, double bc1,      \
                 double bc2);                                                  \
  void upsample2x_forward(const double* in, int c, int h, int w, double* out); \
  void upsample2x_backward(const double* dout, int c, int h, int w,            \
                           double* din);                                       \
  void global_avg_pool_forward(const double* in, int c, int h, int w,          \
                               double* out);                                   \
  void global_avg_pool_backward(const double* dout, int c, int h, int w,       \
                                double* din);                                  \
  void linear_forward(const double* x, int ni, const double* w,                \
                      const double* b, int no, double* y);                     \
  void linear_backward(const double* x, const double* w, const double* dy,     \
                       int ni, int no, double* dx, double* dw, double* db);    \
  }

DRUE_DECLARE_BACKEND(serial_impl)
DRUE_DECLARE_BACKEND(parallel_impl)

#undef DRUE_DECLARE_BACKEND
