#include "sen/tensor.hpp"

#include <cmath>
#include <sstream>

#include "sen/errors.hpp"

namespace sen {

int shape_size(const Shape& s) {
  int n = 1;
  for (int e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  for (int e : shape) {
    if (e <= 0) throw DimensionError("tensor extent must be positive, got shape " + shape_str(shape));
  }
  if (shape_size(shape) != (int)values.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
}

Tensor Tensor::zeros(Shape s) { return full(std::move(s), 0.0); }

Tensor Tensor::full(Shape s, double v) {
  int n = shape_size(s);
  return Tensor(std::move(s), std::vector<double>((size_t)n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  int n = (int)v.size();
  return Tensor({n}, std::move(v));
}

void Tensor::set_requires_grad(bool b) {
  requires_grad = b;
  if (b) {
    grad.assign(values.size(), 0.0);
  } else {
    grad.clear();
  }
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace sen
