#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "drue/kernels.hpp"
#include "drue/rng.hpp"

namespace k = drue::kernels;

namespace {

std::vector<double> rand_vec(size_t n, uint64_t seed) {
  drue::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

int out_dim(int n, int kk, int stride) { return (n + 2 * (kk / 2) - kk) / stride + 1; }

// Direct per-element convolution, used as the correctness oracle.
void naive_conv(const std::vector<double>& in, int ci, int h, int w,
                const std::vector<double>& wt, const std::vector<double>& bias,
                int co, int kk, int stride, std::vector<double>& out, int ho,
                int wo) {
  const int pad = kk / 2;
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < kk; ++ky)
            for (int kx = 0; kx < kk; ++kx) {
              const int iy = oy * stride + ky - pad;
              const int ix = ox * stride + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += wt[((size_t(oc) * ci + ic) * kk + ky) * kk + kx] *
                     in[(size_t(ic) * h + iy) * w + ix];
            }
        out[(size_t(oc) * ho + oy) * wo + ox] = acc;
      }
}

struct ConvShape {
  int ci, h, w, co, kk, stride;
};

const ConvShape kShapes[] = {
    {2, 5, 5, 3, 3, 1}, {2, 5, 5, 3, 3, 2}, {3, 8, 8, 4, 1, 1},
    {1, 1, 1, 1, 3, 2}, {2, 7, 3, 2, 3, 2}, {1, 4, 4, 2, 1, 2},
    {8, 16, 16, 16, 3, 2},
};

}  // namespace

TEST_CASE("conv2d forward matches the naive reference") {
  k::set_backend(k::Backend::serial);
  for (const auto& s : kShapes) {
    const int ho = out_dim(s.h, s.kk, s.stride), wo = out_dim(s.w, s.kk, s.stride);
    auto in = rand_vec(size_t(s.ci) * s.h * s.w, 11);
    auto wt = rand_vec(size_t(s.co) * s.ci * s.kk * s.kk, 12);
    auto bias = rand_vec(s.co, 13);
    std::vector<double> out(size_t(s.co) * ho * wo), ref(out.size());
    k::conv2d_forward(in.data(), s.ci, s.h, s.w, wt.data(), bias.data(), s.co,
                      s.kk, s.stride, out.data(), ho, wo);
    naive_conv(in, s.ci, s.h, s.w, wt, bias, s.co, s.kk, s.stride, ref, ho, wo);
    double worst = 0;
    for (size_t i = 0; i < out.size(); ++i)
      worst = std::max(worst, std::fabs(out[i] - ref[i]));
    CHECK(worst < 1e-12);
  }
  k::set_backend(k::Backend::parallel);
}

TEST_CASE("serial and parallel conv kernels agree bitwise") {
  for (const auto& s : kShapes) {
    const int ho = out_dim(s.h, s.kk, s.stride), wo = out_dim(s.w, s.kk, s.stride);
    auto in = rand_vec(size_t(s.ci) * s.h * s.w, 21);
    auto wt = rand_vec(size_t(s.co) * s.ci * s.kk * s.kk, 22);
    auto bias = rand_vec(s.co, 23);
    auto dout = rand_vec(size_t(s.co) * ho * wo, 24);
    auto dw0 = rand_vec(wt.size(), 25);
    auto db0 = rand_vec(bias.size(), 26);

    std::vector<double> out_s(dout.size()), out_p(dout.size());
    std::vector<double> din_s(in.size()), din_p(in.size());
    auto dw_s = dw0, dw_p = dw0;
    auto db_s = db0, db_p = db0;

    k::set_backend(k::Backend::serial);
    k::conv2d_forward(in.data(), s.ci, s.h, s.w, wt.data(), bias.data(), s.co,
                      s.kk, s.stride, out_s.data(), ho, wo);
    k::conv2d_backward_input(dout.data(), s.co, ho, wo, wt.data(), s.ci, s.kk,
                             s.stride, din_s.data(), s.h, s.w);
    k::conv2d_backward_params(dout.data(), s.co, ho, wo, in.data(), s.ci, s.h,
                              s.w, s.kk, s.stride, dw_s.data(), db_s.data());

    k::set_backend(k::Backend::parallel);
    for (int threads : {1, 3}) {
      omp_set_num_threads(threads);
      std::fill(out_p.begin(), out_p.end(), 0.0);
      std::fill(din_p.begin(), din_p.end(), 0.0);
      dw_p = dw0;
      db_p = db0;
      k::conv2d_forward(in.data(), s.ci, s.h, s.w, wt.data(), bias.data(), s.co,
                        s.kk, s.stride, out_p.data(), ho, wo);
      k::conv2d_backward_input(dout.data(), s.co, ho, wo, wt.data(), s.ci, s.kk,
                               s.stride, din_p.data(), s.h, s.w);
      k::conv2d_backward_params(dout.data(), s.co, ho, wo, in.data(), s.ci, s.h,
                                s.w, s.kk, s.stride, dw_p.data(), db_p.data());
      CHECK(same_bits(out_s, out_p));
      CHECK(same_bits(din_s, din_p));
      CHECK(same_bits(dw_s, dw_p));
      CHECK(same_bits(db_s, db_p));
    }
  }
}

TEST_CASE("serial and parallel elementwise kernels agree bitwise") {
  const size_t n = 2 * 4096 + 37;
  auto x = rand_vec(n, 31);
  auto y0 = rand_vec(n, 32);
  auto g = rand_vec(n, 33);

  auto run_all = [&](std::vector<double>& relu, std::vector<double>& sp,
                     std::vector<double>& sg, std::vector<double>& ax,
                     std::vector<double>& p, std::vector<double>& m,
                     std::vector<double>& v) {
    relu.assign(n, 0);
    sp.assign(n, 0);
    sg.assign(n, 0);
    k::relu_forward(x.data(), n, relu.data());
    k::softplus_forward(x.data(), n, sp.data());
    k::sigmoid_forward(x.data(), n, sg.data());
    ax = y0;
    k::axpy(0.37, x.data(), n, ax.data());
    p = x;
    m.assign(n, 0);
    v.assign(n, 0);
    k::adam_step(p.data(), g.data(), m.data(), v.data(), n, 1e-3, 0.9, 0.999,
                 1e-8, 0.1, 0.001);
  };

  std::vector<double> r_s, sp_s, sg_s, ax_s, p_s, m_s, v_s;
  std::vector<double> r_p, sp_p, sg_p, ax_p, p_p, m_p, v_p;
  k::set_backend(k::Backend::serial);
  run_all(r_s, sp_s, sg_s, ax_s, p_s, m_s, v_s);
  k::set_backend(k::Backend::parallel);
  for (int threads : {1, 3}) {
    omp_set_num_threads(threads);
    run_all(r_p, sp_p, sg_p, ax_p, p_p, m_p, v_p);
    CHECK(same_bits(r_s, r_p));
    CHECK(same_bits(sp_s, sp_p));
    CHECK(same_bits(sg_s, sg_p));
    CHECK(same_bits(ax_s, ax_p));
    CHECK(same_bits(p_s, p_p));
    CHECK(same_bits(m_s, m_p));
    CHECK(same_bits(v_s, v_p));
  }
}

namespace {

bool grad_close(double analytic, double numeric) {
  const double tol = 1e-7 + 1e-6 * std::max(std::fabs(analytic), std::fabs(numeric));
  return std::fabs(analytic - numeric) <= tol;
}

// d/dslot of f() by central differences.
template <typename F>
double fd(F&& f, double* slot, double h = 1e-5) {
  const double orig = *slot;
  *slot = orig + h;
  const double fp = f();
  *slot = orig - h;
  const double fm = f();
  *slot = orig;
  return (fp - fm) / (2 * h);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
  k::set_backend(k::Backend::serial);
  for (const auto& s : {ConvShape{2, 5, 5, 3, 3, 2}, ConvShape{2, 6, 6, 2, 1, 1}}) {
    const int ho = out_dim(s.h, s.kk, s.stride), wo = out_dim(s.w, s.kk, s.stride);
    auto in = rand_vec(size_t(s.ci) * s.h * s.w, 41);
    auto wt = rand_vec(size_t(s.co) * s.ci * s.kk * s.kk, 42);
    auto bias = rand_vec(s.co, 43);
    auto c = rand_vec(size_t(s.co) * ho * wo, 44);
    std::vector<double> out(c.size());

    auto loss = [&]() {
      k::conv2d_forward(in.data(), s.ci, s.h, s.w, wt.data(), bias.data(), s.co,
                        s.kk, s.stride, out.data(), ho, wo);
      return dot(out, c);
    };

    std::vector<double> din(in.size()), dw(wt.size(), 0.0), db(bias.size(), 0.0);
    k::conv2d_backward_input(c.data(), s.co, ho, wo, wt.data(), s.ci, s.kk,
                             s.stride, din.data(), s.h, s.w);
    k::conv2d_backward_params(c.data(), s.co, ho, wo, in.data(), s.ci, s.h, s.w,
                              s.kk, s.stride, dw.data(), db.data());

    for (size_t i = 0; i < in.size(); i += 3)
      CHECK(grad_close(din[i], fd(loss, &in[i])));
    for (size_t i = 0; i < wt.size(); i += 3)
      CHECK(grad_close(dw[i], fd(loss, &wt[i])));
    for (size_t i = 0; i < bias.size(); ++i)
      CHECK(grad_close(db[i], fd(loss, &bias[i])));
  }
  k::set_backend(k::Backend::parallel);
}

TEST_CASE("linear gradients match finite differences") {
  const int ni = 10, no = 3;
  auto x = rand_vec(ni, 51);
  auto w = rand_vec(size_t(ni) * no, 52);
  auto b = rand_vec(no, 53);
  auto c = rand_vec(no, 54);
  std::vector<double> y(no);

  auto loss = [&]() {
    k::linear_forward(x.data(), ni, w.data(), b.data(), no, y.data());
    return dot(y, c);
  };

  std::vector<double> dx(ni), dw(size_t(ni) * no, 0.0), db(no, 0.0);
  k::linear_backward(x.data(), w.data(), c.data(), ni, no, dx.data(), dw.data(),
                     db.data());
  for (int i = 0; i < ni; ++i) CHECK(grad_close(dx[i], fd(loss, &x[i])));
  for (size_t i = 0; i < w.size(); ++i) CHECK(grad_close(dw[i], fd(loss, &w[i])));
  for (int i = 0; i < no; ++i) CHECK(grad_close(db[i], fd(loss, &b[i])));
}

TEST_CASE("pool and upsample gradients match finite differences") {
  const int c = 3, h = 4, w = 4;
  auto in = rand_vec(size_t(c) * h * w, 61);

  SUBCASE("global average pool") {
    auto cc = rand_vec(c, 62);
    std::vector<double> out(c);
    auto loss = [&]() {
      k::global_avg_pool_forward(in.data(), c, h, w, out.data());
      return dot(out, cc);
    };
    std::vector<double> din(in.size());
    k::global_avg_pool_backward(cc.data(), c, h, w, din.data());
    for (size_t i = 0; i < in.size(); ++i)
      CHECK(grad_close(din[i], fd(loss, &in[i])));
  }

  SUBCASE("nearest upsample 2x") {
    auto cc = rand_vec(size_t(c) * 2 * h * 2 * w, 63);
    std::vector<double> out(cc.size());
    auto loss = [&]() {
      k::upsample2x_forward(in.data(), c, h, w, out.data());
      return dot(out, cc);
    };
    std::vector<double> din(in.size());
    k::upsample2x_backward(cc.data(), c, h, w, din.data());
    for (size_t i = 0; i < in.size(); ++i)
      CHECK(grad_close(din[i], fd(loss, &in[i])));
  }
}

TEST_CASE("activation derivatives match finite differences") {
  const size_t n = 64;
  drue::Rng rng(71);
  std::vector<double> x(n);
  for (auto& v : x) {
    v = rng.uniform(-3.0, 3.0);
    if (std::fabs(v) < 0.1) v = v < 0 ? v - 0.1 : v + 0.1;  // keep relu smooth
  }
  auto c = rand_vec(n, 72);
  std::vector<double> y(n), dx(n);

  SUBCASE("relu") {
    auto loss = [&]() {
      k::relu_forward(x.data(), n, y.data());
      return dot(y, c);
    };
    k::relu_backward(x.data(), c.data(), n, dx.data());
    for (size_t i = 0; i < n; ++i) CHECK(grad_close(dx[i], fd(loss, &x[i])));
  }

  SUBCASE("softplus") {
    auto loss = [&]() {
      k::softplus_forward(x.data(), n, y.data());
      return dot(y, c);
    };
    k::softplus_backward(x.data(), c.data(), n, dx.data());
    for (size_t i = 0; i < n; ++i) CHECK(grad_close(dx[i], fd(loss, &x[i])));
  }

  SUBCASE("sigmoid") {
    auto loss = [&]() {
      k::sigmoid_forward(x.data(), n, y.data());
      return dot(y, c);
    };
    k::sigmoid_forward(x.data(), n, y.data());
    k::sigmoid_backward(y.data(), c.data(), n, dx.data());
    for (size_t i = 0; i < n; ++i) CHECK(grad_close(dx[i], fd(loss, &x[i])));
  }
}

TEST_CASE("softplus and sigmoid stay finite at extreme inputs") {
  const std::vector<double> x = {-745.0, -40.0, 0.0, 40.0, 745.0};
  std::vector<double> y(x.size());
  k::softplus_forward(x.data(), x.size(), y.data());
  for (size_t i = 0; i < x.size(); ++i) {
    CHECK(std::isfinite(y[i]));
    CHECK(y[i] >= 0.0);
  }
  k::sigmoid_forward(x.data(), x.size(), y.data());
  for (size_t i = 0; i < x.size(); ++i) {
    CHECK(y[i] >= 0.0);
    CHECK(y[i] <= 1.0);
  }
}

TEST_CASE("adam step matches a scalar reference") {
  double p = 0.5, g = 0.2, m = 0.0, v = 0.0;
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  k::adam_step(&p, &g, &m, &v, 1, lr, b1, b2, eps, 1 - b1, 1 - b2);

  const double m_ref = (1 - b1) * 0.2;
  const double v_ref = (1 - b2) * 0.04;
  const double mh = m_ref / (1 - b1), vh = v_ref / (1 - b2);
  const double p_ref = 0.5 - lr * mh / (std::sqrt(vh) + eps);
  CHECK(m == doctest::Approx(m_ref).epsilon(1e-15));
  CHECK(v == doctest::Approx(v_ref).epsilon(1e-15));
  CHECK(p == doctest::Approx(p_ref).epsilon(1e-15));
}

TEST_CASE("add, mul and axpy do what they say") {
  const size_t n = 5;
  std::vector<double> a = {1, 2, 3, 4, 5}, b = {10, 20, 30, 40, 50}, y(n);
  k::add(a.data(), b.data(), n, y.data());
  for (size_t i = 0; i < n; ++i) CHECK(y[i] == a[i] + b[i]);
  k::mul(a.data(), b.data(), n, y.data());
  for (size_t i = 0; i < n; ++i) CHECK(y[i] == a[i] * b[i]);
  y = b;
  k::axpy(2.0, a.data(), n, y.data());
  for (size_t i = 0; i < n; ++i) CHECK(y[i] == b[i] + 2.0 * a[i]);
}
