#pragma once

#include <string>
#include <vector>

namespace sen {

using Shape = std::vector<int>;

int shape_size(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major 64-bit tensor. `grad` is kept alongside the values and is
// only populated for tensors that participate in training.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v);

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double v);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);

  int size() const { return (int)values.size(); }
  bool is_scalar() const { return values.size() == 1; }

  void set_requires_grad(bool b);
  void zero_grad();
  bool all_finite() const;

  double& operator[](int i) { return values[(size_t)i]; }
  double operator[](int i) const { return values[(size_t)i]; }
};

}  // namespace sen
