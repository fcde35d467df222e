#include "drue/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels_backends.hpp"

namespace drue::kernels {

namespace {

Backend initial_backend() {
  const char* env = std::getenv("DRUE_KERNELS");
  if (env && std::strcmp(env, "serial") == 0) return Backend::serial;
  return Backend::parallel;
}

std::atomic<Backend> g_backend{initial_backend()};

}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }
const char* backend_name() {
  return backend() == Backend::serial ? "serial" : "parallel";
}

#define DRUE_DISPATCH(fn, ...)                       \
  if (g_backend.load() == Backend::serial)           \
    serial_impl::fn(__VA_ARGS__);                    \
  else                                               \
    parallel_impl::fn(__VA_ARGS__)

void conv2d_forward(const double* in, int ci, int h, int w, const double* wt,
                    const double* bias, int co, int k, int stride, double* out,
                    int ho, int wo) {
  DRUE_DISPATCH(conv2d_forward, in, ci, h, w, wt, bias, co, k, stride, out, ho,
                wo);
}

void conv2d_backward_input(const double* dout, int co, int ho, int wo,
                           const double* wt, int ci, int k, int stride,
                           double* din, int h, int w) {
  DRUE_DISPATCH(conv2d_backward_input, dout, co, ho, wo, wt, ci, k, stride, din,
                h, w);
}

void conv2d_backward_params(const double* dout, int co, int ho, int wo,
                            const double* in, int ci, int h, int w, int k,
                            int stride, double* dw, double* db) {
  DRUE_DISPATCH(conv2d_backward_params, dout, co, ho, wo, in, ci, h, w, k,
                stride, dw, db);
}

void relu_forward(const double* x, size_t n, double* y) {
  DRUE_DISPATCH(relu_forward, x, n, y);
}

void relu_backward(const double* x, const double* dy, size_t n, double* dx) {
  DRUE_DISPATCH(relu_backward, x, dy, n, dx);
}

void softplus_forward(const double* x, size_t n, double* y) {
  DRUE_DISPATCH(softplus_forward, x, n, y);
}

void softplus_backward(const double* x, const double* dy, size_t n,
                       double* dx) {
  DRUE_DISPATCH(softplus_backward, x, dy, n, dx);
}

void sigmoid_forward(const double* x, size_t n, double* y) {
  DRUE_DISPATCH(sigmoid_forward, x, n, y);
}

void sigmoid_backward(const double* y, const double* dy, size_t n, double* dx) {
  DRUE_DISPATCH(sigmoid_backward, y, dy, n, dx);
}

void add(const double* a, const double* b, size_t n, double* y) {
  DRUE_DISPATCH(add, a, b, n, y);
}

void mul(const double* a, const double* b, size_t n, double* y) {
  DRUE_DISPATCH(mul, a, b, n, y);
}

void axpy(double a, const double* x, size_t n, double* y) {
  DRUE_DISPATCH(axpy, a, x, n, y);
}

void adam_step(double* p, const double* g, double* m, double* v, size_t n,
               double lr, double b1, double b2, double eps, double bc1,
               double bc2) {
  DRUE_DISPATCH(adam_step, p, g, m, v, n, lr, b1, b2, eps, bc1, bc2);
}

void upsample2x_forward(const double* in, int c, int h, int w, double* out) {
  DRUE_DISPATCH(upsample2x_forward, in, c, h, w, out);
}

void upsample2x_backward(const double* dout, int c, int h, int w, double* din) {
  DRUE_DISPATCH(upsample2x_backward, dout, c, h, w, din);
}

void global_avg_pool_forward(const double* in, int c, int h, int w,
                             double* out) {
  DRUE_DISPATCH(global_avg_pool_forward, in, c, h, w, out);
}

void global_avg_pool_backward(const double* dout, int c, int h, int w,
                              double* din) {
  DRUE_DISPATCH(global_avg_pool_backward, dout, c, h, w, din);
}

void linear_forward(const double* x, int ni, const double* w, const double* b,
                    int no, double* y) {
  DRUE_DISPATCH(linear_forward, x, ni, w, b, no, y);
}

void linear_backward(const double* x, const double* w, const double* dy, int ni,
                     int no, double* dx, double* dw, double* db) {
  DRUE_DISPATCH(linear_backward, x, w, dy, ni, no, dx, dw, db);
}

#undef DRUE_DISPATCH

}  // namespace drue::kernels
