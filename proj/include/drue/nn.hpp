#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drue/rng.hpp"
#include "drue/tensor.hpp"

namespace drue::nn {

// Named parameter with its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  explicit Param(std::vector<int> shape) : value(shape), grad(value.shape()) {}
};

enum class Act { relu, softplus, identity };

// Layers cache what backward/jvp need when forward(..., cache=true) is called.
// backward accumulates into Param::grad and returns the input gradient; jvp
// propagates a tangent through the linearization at the cached point.

class Conv2d {
 public:
  Conv2d(int ci, int co, int k, int stride);
  void init_he(Rng& rng, double gain = 2.0);
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy);
  Tensor jvp(const Tensor& tx) const;
  void collect(const std::string& prefix, std::vector<Param*>& out);
  int ci() const { return ci_; }
  int co() const { return co_; }

  Param w, b;

 private:
  Tensor run(const Tensor& x) const;
  int ci_, co_, k_, stride_;
  Tensor x_;
};

class Activation {
 public:
  explicit Activation(Act kind) : kind_(kind) {}
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy) const;
  Tensor jvp(const Tensor& tx) const;
  Act kind() const { return kind_; }

 private:
  Act kind_;
  Tensor x_;
};

class Sigmoid {
 public:
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy) const;
  Tensor jvp(const Tensor& tx) const;

 private:
  Tensor y_;
};

class Upsample2x {
 public:
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& dy) const;
  Tensor jvp(const Tensor& tx) const { return forward(tx); }
};

class GlobalAvgPool {
 public:
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy) const;

 private:
  int h_ = 0, w_ = 0, c_ = 0;
};

class Linear {
 public:
  Linear(int ni, int no);
  void init_he(Rng& rng, double gain = 2.0);
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy);
  void collect(const std::string& prefix, std::vector<Param*>& out);

  Param w, b;

 private:
  int ni_, no_;
  Tensor x_;
};

// conv-act-conv with an identity (or 1x1 projection) shortcut, post-add
// activation. downsample halves the spatial size via stride 2 on conv1 and
// the projection.
class ResidualBlock {
 public:
  ResidualBlock(int ci, int co, bool downsample, Act act);
  void init_he(Rng& rng);
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy);
  Tensor jvp(const Tensor& tx) const;
  void collect(const std::string& prefix, std::vector<Param*>& out);
  bool has_projection() const { return proj.has_value(); }

  Conv2d conv1, conv2;
  std::optional<Conv2d> proj;
  Activation act1, act2;
};

// Mirror-side stage: optional nearest 2x upsample followed by a stride-1
// residual block.
class DecoderBlock {
 public:
  DecoderBlock(int ci, int co, bool upsample, Act act);
  void init_he(Rng& rng) { block.init_he(rng); }
  Tensor forward(const Tensor& x, bool cache = false);
  Tensor backward(const Tensor& dy);
  Tensor jvp(const Tensor& tx) const;
  void collect(const std::string& prefix, std::vector<Param*>& out);

  std::optional<Upsample2x> up;
  ResidualBlock block;
};

class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr, double b1 = 0.9,
                double b2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();
  int t() const { return t_; }

 private:
  struct Slot {
    Param* p;
    Tensor m, v;
  };
  std::vector<Slot> slots_;
  double lr_, b1_, b2_, eps_;
  int t_ = 0;
};

// Inverted dropout driven by an explicit generator; used only for MC scoring.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

Tensor softmax(const Tensor& logits);
// Returns -log p[label]; when dlogits is given, writes p - onehot(label).
double softmax_ce(const Tensor& logits, int label, Tensor* dlogits);
// Mean over elements of (pred-target)^2; writes 2(pred-target)/n into dpred.
double mse(const Tensor& pred, const Tensor& target, Tensor* dpred);

}  // namespace drue::nn
