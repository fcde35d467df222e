#include "kernels_detail.hpp"

#include <cmath>

namespace drue::kernels::detail {

namespace {

// Valid ox range so that ix = ox*stride + off stays inside [0, w).
inline void ox_bounds(int off, int stride, int w, int wo, int& x0, int& x1) {
  x0 = off < 0 ? (-off + stride - 1) / stride : 0;
  x1 = (w - 1 - off) < 0 ? 0 : (w - 1 - off) / stride + 1;
  if (x1 > wo) x1 = wo;
  if (x0 > x1) x0 = x1;
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void conv_fwd_row(const double* in, int ci, int h, int w, const double* wt,
                  const double* bias, int k, int stride, int pad, int oc,
                  int oy, int wo, double* out_row) {
  for (int ox = 0; ox < wo; ++ox) out_row[ox] = bias[oc];
  for (int ic = 0; ic < ci; ++ic) {
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * stride + ky - pad;
      if (iy < 0 || iy >= h) continue;
      const double* irow = in + (static_cast<size_t>(ic) * h + iy) * w;
      const double* wrow =
          wt + ((static_cast<size_t>(oc) * ci + ic) * k + ky) * k;
      for (int kx = 0; kx < k; ++kx) {
        const double wv = wrow[kx];
        const int off = kx - pad;
        int x0, x1;
        ox_bounds(off, stride, w, wo, x0, x1);
        for (int ox = x0; ox < x1; ++ox)
          out_row[ox] += wv * irow[ox * stride + off];
      }
    }
  }
}

void conv_bwd_input_row(const double* dout, int co, int ho, int wo,
                        const double* wt, int ci, int k, int stride, int pad,
                        int ic, int iy, int w, double* din_row) {
  for (int ix = 0; ix < w; ++ix) din_row[ix] = 0.0;
  for (int oc = 0; oc < co; ++oc) {
    const double* wbase = wt + (static_cast<size_t>(oc) * ci + ic) * k * k;
    for (int ky = 0; ky < k; ++ky) {
      const int t = iy + pad - ky;
      if (t < 0 || t % stride != 0) continue;
      const int oy = t / stride;
      if (oy >= ho) continue;
      const double* dorow = dout + (static_cast<size_t>(oc) * ho + oy) * wo;
      for (int kx = 0; kx < k; ++kx) {
        const double wv = wbase[ky * k + kx];
        const int off = kx - pad;
        int x0, x1;
        ox_bounds(off, stride, w, wo, x0, x1);
        for (int ox = x0; ox < x1; ++ox)
          din_row[ox * stride + off] += wv * dorow[ox];
      }
    }
  }
}

void conv_bwd_weight_slice(const double* dout, int ho, int wo, const double* in,
                           int h, int w, int ci, int k, int stride, int pad,
                           int oc, int ic, double* dw) {
  double* dwslice = dw + (static_cast<size_t>(oc) * ci + ic) * k * k;
  const double* dobase = dout + static_cast<size_t>(oc) * ho * wo;
  const double* ibase = in + static_cast<size_t>(ic) * h * w;
  for (int ky = 0; ky < k; ++ky) {
    for (int kx = 0; kx < k; ++kx) {
      const int off = kx - pad;
      int x0, x1;
      ox_bounds(off, stride, w, wo, x0, x1);
      double acc = 0.0;
      for (int oy = 0; oy < ho; ++oy) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        const double* dorow = dobase + static_cast<size_t>(oy) * wo;
        const double* irow = ibase + static_cast<size_t>(iy) * w;
        for (int ox = x0; ox < x1; ++ox)
          acc += dorow[ox] * irow[ox * stride + off];
      }
      dwslice[ky * k + kx] += acc;
    }
  }
}

void conv_bwd_bias_item(const double* dout, int ho, int wo, int oc,
                        double* db) {
  const double* dobase = dout + static_cast<size_t>(oc) * ho * wo;
  double acc = 0.0;
  const size_t n = static_cast<size_t>(ho) * wo;
  for (size_t i = 0; i < n; ++i) acc += dobase[i];
  db[oc] += acc;
}

void relu_fwd_span(const double* x, size_t i0, size_t i1, double* y) {
  for (size_t i = i0; i < i1; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_span(const double* x, const double* dy, size_t i0, size_t i1,
                   double* dx) {
  for (size_t i = i0; i < i1; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

void softplus_fwd_span(const double* x, size_t i0, size_t i1, double* y) {
  for (size_t i = i0; i < i1; ++i) {
    const double v = x[i];
    y[i] = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
}

void softplus_bwd_span(const double* x, const double* dy, size_t i0, size_t i1,
                       double* dx) {
  for (size_t i = i0; i < i1; ++i) dx[i] = dy[i] * stable_sigmoid(x[i]);
}

void sigmoid_fwd_span(const double* x, size_t i0, size_t i1, double* y) {
  for (size_t i = i0; i < i1; ++i) y[i] = stable_sigmoid(x[i]);
}

void sigmoid_bwd_span(const double* y, const double* dy, size_t i0, size_t i1,
                      double* dx) {
  for (size_t i = i0; i < i1; ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
}

void add_span(const double* a, const double* b, size_t i0, size_t i1,
              double* y) {
  for (size_t i = i0; i < i1; ++i) y[i] = a[i] + b[i];
}

void mul_span(const double* a, const double* b, size_t i0, size_t i1,
              double* y) {
  for (size_t i = i0; i < i1; ++i) y[i] = a[i] * b[i];
}

void axpy_span(double a, const double* x, size_t i0, size_t i1, double* y) {
  for (size_t i = i0; i < i1; ++i) y[i] += a * x[i];
}

void adam_span(double* p, const double* g, double* m, double* v, size_t i0,
               size_t i1, double lr, double b1, double b2, double eps,
               double bc1, double bc2) {
  for (size_t i = i0; i < i1; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

void upsample_fwd_row(const double* in, int h, int w, int c, int oy,
                      double* out_row) {
  const double* irow = in + (static_cast<size_t>(c) * h + oy / 2) * w;
  const int wo = 2 * w;
  for (int ox = 0; ox < wo; ++ox) out_row[ox] = irow[ox / 2];
}

void upsample_bwd_row(const double* dout, int h, int w, int c, int iy,
                      double* din_row) {
  const int wo = 2 * w;
  const double* r0 = dout + (static_cast<size_t>(c) * 2 * h + 2 * iy) * wo;
  const double* r1 = r0 + wo;
  for (int ix = 0; ix < w; ++ix)
    din_row[ix] = (r0[2 * ix] + r0[2 * ix + 1]) + (r1[2 * ix] + r1[2 * ix + 1]);
}

void gap_fwd_item(const double* in, int h, int w, int c, double* out) {
  const double* base = in + static_cast<size_t>(c) * h * w;
  const size_t n = static_cast<size_t>(h) * w;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += base[i];
  out[c] = acc / static_cast<double>(n);
}

void gap_bwd_item(const double* dout, int h, int w, int c, double* din) {
  double* base = din + static_cast<size_t>(c) * h * w;
  const size_t n = static_cast<size_t>(h) * w;
  const double g = dout[c] / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) base[i] = g;
}

void linear_fwd_item(const double* x, int ni, const double* w, const double* b,
                     int o, double* y) {
  const double* wrow = w + static_cast<size_t>(o) * ni;
  double acc = b[o];
  for (int i = 0; i < ni; ++i) acc += wrow[i] * x[i];
  y[o] = acc;
}

void linear_bwd_dx_span(const double* w, const double* dy, int ni, int no,
                        size_t i0, size_t i1, double* dx) {
  for (size_t i = i0; i < i1; ++i) {
    double acc = 0.0;
    for (int o = 0; o < no; ++o) acc += dy[o] * w[static_cast<size_t>(o) * ni + i];
    dx[i] = acc;
  }
}

void linear_bwd_dwdb_item(const double* x, const double* dy, int ni, int o,
                          double* dw, double* db) {
  double* dwrow = dw + static_cast<size_t>(o) * ni;
  const double g = dy[o];
  for (int i = 0; i < ni; ++i) dwrow[i] += g * x[i];
  db[o] += g;
}

}  // namespace drue::kernels::detail
