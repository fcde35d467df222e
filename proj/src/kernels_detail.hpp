#pragma once

#include <cstddef>

// Per-work-item workers shared by the serial and OpenMP backends. Each worker
// owns a disjoint slice of the output, so scheduling order cannot change any
// floating point result. All of them live in one translation unit to keep the
// generated code (and therefore rounding) identical across backends.
namespace drue::kernels::detail {

inline constexpr size_t kChunk = 4096;

void conv_fwd_row(const double* in, int ci, int h, int w, const double* wt,
                  const double* bias, int k, int stride, int pad, int oc,
                  int oy, int wo, double* out_row);

void conv_bwd_input_row(const double* dout, int co, int ho, int wo,
                        const double* wt, int ci, int k, int stride, int pad,
                        int ic, int iy, int w, double* din_row);

void conv_bwd_weight_slice(const double* dout, int ho, int wo, const double* in,
                           int h, int w, int ci, int k, int stride, int pad,
                           int oc, int ic, double* dw);

void conv_bwd_bias_item(const double* dout, int ho, int wo, int oc, double* db);

void relu_fwd_span(const double* x, size_t i0, size_t i1, double* y);
void relu_bwd_span(const double* x, const double* dy, size_t i0, size_t i1,
                   double* dx);
void softplus_fwd_span(const double* x, size_t i0, size_t i1, double* y);
void softplus_bwd_span(const double* x, const double* dy, size_t i0, size_t i1,
                       double* dx);
void sigmoid_fwd_span(const double* x, size_t i0, size_t i1, double* y);
void sigmoid_bwd_span(const double* y, const double* dy, size_t i0, size_t i1,
                      double* dx);
void add_span(const double* a, const double* b, size_t i0, size_t i1,
              double* y);
void mul_span(const double* a, const double* b, size_t i0, size_t i1,
              double* y);
void axpy_span(double a, const double* x, size_t i0, size_t i1, double* y);
void adam_span(double* p, const double* g, double* m, double* v, size_t i0,
               size_t i1, double lr, double b1, double b2, double eps,
               double bc1, double bc2);

void upsample_fwd_row(const double* in, int h, int w, int c, int oy,
                      double* out_row);
void upsample_bwd_row(const double* dout, int h, int w, int c, int iy,
                      double* din_row);
void gap_fwd_item(const double* in, int h, int w, int c, double* out);
void gap_bwd_item(const double* dout, int h, int w, int c, double* din);

void linear_fwd_item(const double* x, int ni, const double* w, const double* b,
                     int o, double* y);
void linear_bwd_dx_span(const double* w, const double* dy, int ni, int no,
                        size_t i0, size_t i1, double* dx);
void linear_bwd_dwdb_item(const double* x, const double* dy, int ni, int o,
                          double* dw, double* db);

}  // namespace drue::kernels::detail
