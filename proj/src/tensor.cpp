#include "drue/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "drue/errors.hpp"

namespace drue {

namespace {
size_t shape_volume(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ContractViolation("tensor dimension must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_volume(shape_), 0.0) {}

Tensor::Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double x : data_) s += x;
  return s;
}

double Tensor::mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(size()); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "]";
  return os.str();
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ContractViolation("mean_abs_diff: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  if (a.size() == 0) return 0.0;
  return l1_diff(a, b) / static_cast<double>(a.size());
}

double l1_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ContractViolation("l1_diff: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

double l1_norm(const Tensor& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i]);
  return s;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace drue
