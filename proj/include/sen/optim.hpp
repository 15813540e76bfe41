#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sen/tape.hpp"
#include "sen/tensor.hpp"

namespace sen {

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

enum class OptKind { SGD, Adam };

OptKind opt_kind_from_string(const std::string& s);

struct OptimizerState {
  OptKind kind = OptKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;

  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::unordered_map<std::string, Moments> moments;
};

// Applies one update from each parameter's grad buffer, then zeroes the
// grads. Throws NumericError naming the parameter if its gradient is not
// finite.
void optimizer_step(const NamedParams& params, OptimizerState& state);

// Builds a scalar loss from the given parameter refs; must be a pure
// function of the parameter values.
using LossBuilder = std::function<Tape::Ref(Tape&, const std::vector<Tape::Ref>&)>;

// Compares backward() gradients against central finite differences
// (f(x+eps) - f(x-eps)) / (2 eps) and returns the worst relative error over
// all coordinates, with rel = |a-n| / max(|a|, |n|, 1e-4).
double grad_check(const LossBuilder& build, const NamedParams& params, double eps = 1e-5);

}  // namespace sen
