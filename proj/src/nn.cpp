#include "drue/nn.hpp"

#include <cmath>
#include <cstring>

#include "drue/errors.hpp"
#include "drue/kernels.hpp"

namespace drue::nn {

namespace {

void check_chw(const Tensor& x, int c, const char* who) {
  if (x.ndim() != 3 || x.dim(0) != c)
    throw ContractViolation(std::string(who) + ": expected [" +
                            std::to_string(c) + ",H,W], got " + x.shape_str());
}

}  // namespace

// --- Conv2d ----------------------------------------------------------------

Conv2d::Conv2d(int ci, int co, int k, int stride)
    : w({co, ci, k, k}), b({co}), ci_(ci), co_(co), k_(k), stride_(stride) {
  if (k != 1 && k != 3) throw ContractViolation("Conv2d: kernel must be 1 or 3");
  if (stride != 1 && stride != 2)
    throw ContractViolation("Conv2d: stride must be 1 or 2");
}

void Conv2d::init_he(Rng& rng, double gain) {
  const double stddev = std::sqrt(gain / (static_cast<double>(ci_) * k_ * k_));
  for (size_t i = 0; i < w.value.size(); ++i) w.value[i] = rng.normal(0.0, stddev);
  b.value.zero();
}

Tensor Conv2d::run(const Tensor& x) const {
  check_chw(x, ci_, "Conv2d");
  const int h = x.dim(1), wd = x.dim(2);
  const int pad = k_ / 2;
  const int ho = (h + 2 * pad - k_) / stride_ + 1;
  const int wo = (wd + 2 * pad - k_) / stride_ + 1;
  Tensor out({co_, ho, wo});
  kernels::conv2d_forward(x.data(), ci_, h, wd, w.value.data(), b.value.data(),
                          co_, k_, stride_, out.data(), ho, wo);
  return out;
}

Tensor Conv2d::forward(const Tensor& x, bool cache) {
  if (cache) x_ = x;
  return run(x);
}

Tensor Conv2d::backward(const Tensor& dy) {
  if (x_.empty()) throw ContractViolation("Conv2d::backward without cached input");
  const int h = x_.dim(1), wd = x_.dim(2);
  Tensor din(x_.shape());
  kernels::conv2d_backward_input(dy.data(), co_, dy.dim(1), dy.dim(2),
                                 w.value.data(), ci_, k_, stride_, din.data(), h,
                                 wd);
  kernels::conv2d_backward_params(dy.data(), co_, dy.dim(1), dy.dim(2),
                                  x_.data(), ci_, h, wd, k_, stride_,
                                  w.grad.data(), b.grad.data());
  return din;
}

Tensor Conv2d::jvp(const Tensor& tx) const {
  check_chw(tx, ci_, "Conv2d::jvp");
  const int h = tx.dim(1), wd = tx.dim(2);
  const int pad = k_ / 2;
  const int ho = (h + 2 * pad - k_) / stride_ + 1;
  const int wo = (wd + 2 * pad - k_) / stride_ + 1;
  Tensor out({co_, ho, wo});
  const std::vector<double> zero_bias(static_cast<size_t>(co_), 0.0);
  kernels::conv2d_forward(tx.data(), ci_, h, wd, w.value.data(),
                          zero_bias.data(), co_, k_, stride_, out.data(), ho,
                          wo);
  return out;
}

void Conv2d::collect(const std::string& prefix, std::vector<Param*>& out) {
  w.name = prefix + ".w";
  b.name = prefix + ".b";
  out.push_back(&w);
  out.push_back(&b);
}

// --- Activation --------------------------------------------------------------

Tensor Activation::forward(const Tensor& x, bool cache) {
  if (cache) x_ = x;
  if (kind_ == Act::identity) return x;
  Tensor y(x.shape());
  if (kind_ == Act::relu)
    kernels::relu_forward(x.data(), x.size(), y.data());
  else
    kernels::softplus_forward(x.data(), x.size(), y.data());
  return y;
}

Tensor Activation::backward(const Tensor& dy) const {
  if (kind_ == Act::identity) return dy;
  if (x_.empty())
    throw ContractViolation("Activation::backward without cached input");
  Tensor dx(dy.shape());
  if (kind_ == Act::relu)
    kernels::relu_backward(x_.data(), dy.data(), dy.size(), dx.data());
  else
    kernels::softplus_backward(x_.data(), dy.data(), dy.size(), dx.data());
  return dx;
}

Tensor Activation::jvp(const Tensor& tx) const { return backward(tx); }

// --- Sigmoid -----------------------------------------------------------------

Tensor Sigmoid::forward(const Tensor& x, bool cache) {
  Tensor y(x.shape());
  kernels::sigmoid_forward(x.data(), x.size(), y.data());
  if (cache) y_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& dy) const {
  if (y_.empty()) throw ContractViolation("Sigmoid::backward without cached output");
  Tensor dx(dy.shape());
  kernels::sigmoid_backward(y_.data(), dy.data(), dy.size(), dx.data());
  return dx;
}

Tensor Sigmoid::jvp(const Tensor& tx) const { return backward(tx); }

// --- Upsample2x ----------------------------------------------------------------

Tensor Upsample2x::forward(const Tensor& x) const {
  if (x.ndim() != 3) throw ContractViolation("Upsample2x: expected [C,H,W]");
  Tensor out({x.dim(0), 2 * x.dim(1), 2 * x.dim(2)});
  kernels::upsample2x_forward(x.data(), x.dim(0), x.dim(1), x.dim(2), out.data());
  return out;
}

Tensor Upsample2x::backward(const Tensor& dy) const {
  if (dy.ndim() != 3 || dy.dim(1) % 2 != 0 || dy.dim(2) % 2 != 0)
    throw ContractViolation("Upsample2x::backward: expected even [C,H,W]");
  Tensor din({dy.dim(0), dy.dim(1) / 2, dy.dim(2) / 2});
  kernels::upsample2x_backward(dy.data(), din.dim(0), din.dim(1), din.dim(2),
                               din.data());
  return din;
}

// --- GlobalAvgPool ---------------------------------------------------------------

Tensor GlobalAvgPool::forward(const Tensor& x, bool cache) {
  if (x.ndim() != 3) throw ContractViolation("GlobalAvgPool: expected [C,H,W]");
  if (cache) {
    c_ = x.dim(0);
    h_ = x.dim(1);
    w_ = x.dim(2);
  }
  Tensor out({x.dim(0)});
  kernels::global_avg_pool_forward(x.data(), x.dim(0), x.dim(1), x.dim(2),
                                   out.data());
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) const {
  if (h_ == 0) throw ContractViolation("GlobalAvgPool::backward without cache");
  Tensor din({c_, h_, w_});
  kernels::global_avg_pool_backward(dy.data(), c_, h_, w_, din.data());
  return din;
}

// --- Linear ------------------------------------------------------------------

Linear::Linear(int ni, int no) : w({no, ni}), b({no}), ni_(ni), no_(no) {}

void Linear::init_he(Rng& rng, double gain) {
  const double stddev = std::sqrt(gain / static_cast<double>(ni_));
  for (size_t i = 0; i < w.value.size(); ++i) w.value[i] = rng.normal(0.0, stddev);
  b.value.zero();
}

Tensor Linear::forward(const Tensor& x, bool cache) {
  if (x.size() != static_cast<size_t>(ni_))
    throw ContractViolation("Linear: input size mismatch");
  if (cache) x_ = x;
  Tensor y({no_});
  kernels::linear_forward(x.data(), ni_, w.value.data(), b.value.data(), no_,
                          y.data());
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  if (x_.empty()) throw ContractViolation("Linear::backward without cached input");
  Tensor dx(x_.shape());
  kernels::linear_backward(x_.data(), w.value.data(), dy.data(), ni_, no_,
                           dx.data(), w.grad.data(), b.grad.data());
  return dx;
}

void Linear::collect(const std::string& prefix, std::vector<Param*>& out) {
  w.name = prefix + ".w";
  b.name = prefix + ".b";
  out.push_back(&w);
  out.push_back(&b);
}

// --- ResidualBlock -------------------------------------------------------------

ResidualBlock::ResidualBlock(int ci, int co, bool downsample, Act act)
    : conv1(ci, co, 3, downsample ? 2 : 1),
      conv2(co, co, 3, 1),
      act1(act),
      act2(act) {
  if (downsample || ci != co) proj.emplace(ci, co, 1, downsample ? 2 : 1);
}

void ResidualBlock::init_he(Rng& rng) {
  conv1.init_he(rng);
  conv2.init_he(rng);
  if (proj) proj->init_he(rng);
}

Tensor ResidualBlock::forward(const Tensor& x, bool cache) {
  Tensor h1 = act1.forward(conv1.forward(x, cache), cache);
  Tensor h2 = conv2.forward(h1, cache);
  Tensor sc = proj ? proj->forward(x, cache) : x;
  if (!h2.same_shape(sc))
    throw ContractViolation("ResidualBlock: branch shapes differ");
  Tensor s(h2.shape());
  kernels::add(h2.data(), sc.data(), s.size(), s.data());
  return act2.forward(s, cache);
}

Tensor ResidualBlock::backward(const Tensor& dy) {
  Tensor ds = act2.backward(dy);
  Tensor d_main = conv1.backward(act1.backward(conv2.backward(ds)));
  Tensor d_sc = proj ? proj->backward(ds) : ds;
  Tensor dx(d_main.shape());
  kernels::add(d_main.data(), d_sc.data(), dx.size(), dx.data());
  return dx;
}

Tensor ResidualBlock::jvp(const Tensor& tx) const {
  Tensor th = act1.jvp(conv1.jvp(tx));
  Tensor th2 = conv2.jvp(th);
  Tensor tsc = proj ? proj->jvp(tx) : tx;
  Tensor ts(th2.shape());
  kernels::add(th2.data(), tsc.data(), ts.size(), ts.data());
  return act2.jvp(ts);
}

void ResidualBlock::collect(const std::string& prefix, std::vector<Param*>& out) {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
  if (proj) proj->collect(prefix + ".proj", out);
}

// --- DecoderBlock ----------------------------------------------------------------

DecoderBlock::DecoderBlock(int ci, int co, bool upsample, Act act)
    : block(ci, co, false, act) {
  if (upsample) up.emplace();
}

Tensor DecoderBlock::forward(const Tensor& x, bool cache) {
  return block.forward(up ? up->forward(x) : x, cache);
}

Tensor DecoderBlock::backward(const Tensor& dy) {
  Tensor d = block.backward(dy);
  return up ? up->backward(d) : d;
}

Tensor DecoderBlock::jvp(const Tensor& tx) const {
  return block.jvp(up ? up->jvp(tx) : tx);
}

void DecoderBlock::collect(const std::string& prefix, std::vector<Param*>& out) {
  block.collect(prefix, out);
}

// --- Adam --------------------------------------------------------------------

Adam::Adam(std::vector<Param*> params, double lr, double b1, double b2,
           double eps)
    : lr_(lr), b1_(b1), b2_(b2), eps_(eps) {
  slots_.reserve(params.size());
  for (Param* p : params)
    slots_.push_back({p, Tensor(p->value.shape()), Tensor(p->value.shape())});
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, t_);
  const double bc2 = 1.0 - std::pow(b2_, t_);
  for (auto& s : slots_)
    kernels::adam_step(s.p->value.data(), s.p->grad.data(), s.m.data(),
                       s.v.data(), s.p->value.size(), lr_, b1_, b2_, eps_, bc1,
                       bc2);
}

void Adam::zero_grad() {
  for (auto& s : slots_) s.p->grad.zero();
}

// --- free functions -------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractViolation("dropout: rate must be in [0,1)");
  if (rate == 0.0) return x;
  Tensor y(x.shape());
  const double scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < x.size(); ++i)
    y[i] = rng.bernoulli(rate) ? 0.0 : x[i] * scale;
  return y;
}

Tensor softmax(const Tensor& logits) {
  Tensor p(logits.shape());
  double m = logits[0];
  for (size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (size_t i = 0; i < p.size(); ++i) p[i] /= sum;
  return p;
}

double softmax_ce(const Tensor& logits, int label, Tensor* dlogits) {
  if (label < 0 || static_cast<size_t>(label) >= logits.size())
    throw ContractViolation("softmax_ce: label out of range");
  Tensor p = softmax(logits);
  const double loss = -std::log(p[static_cast<size_t>(label)]);
  if (dlogits) {
    *dlogits = p;
    (*dlogits)[static_cast<size_t>(label)] -= 1.0;
  }
  return loss;
}

double mse(const Tensor& pred, const Tensor& target, Tensor* dpred) {
  if (!pred.same_shape(target)) throw ContractViolation("mse: shape mismatch");
  const double n = static_cast<double>(pred.size());
  double loss = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    loss += d * d;
  }
  loss /= n;
  if (dpred) {
    *dpred = Tensor(pred.shape());
    for (size_t i = 0; i < pred.size(); ++i)
      (*dpred)[i] = 2.0 * (pred[i] - target[i]) / n;
  }
  return loss;
}

}  // namespace drue::nn
