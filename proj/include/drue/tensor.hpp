#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace drue {

// Dense row-major double tensor. Feature maps use [C,H,W] order; vectors are 1-D.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // [C,H,W] accessor
  double& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double v);
  void zero() { fill(0.0); }

  double sum() const;
  double mean() const;
  double max_abs() const;
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// Mean absolute elementwise gap between two same-shaped tensors.
double mean_abs_diff(const Tensor& a, const Tensor& b);
// Sum of absolute elementwise gaps (L1 distance).
double l1_diff(const Tensor& a, const Tensor& b);
double l1_norm(const Tensor& a);
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace drue
