#include "sen/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sen/errors.hpp"

namespace sen {

OptKind opt_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptKind::SGD;
  if (s == "adam") return OptKind::Adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

void optimizer_step(const NamedParams& params, OptimizerState& state) {
  state.step_count += 1;
  for (const auto& [name, p] : params) {
    if (p->grad.size() != p->values.size()) {
      throw ContractError("optimizer_step: parameter '" + name + "' has no gradient buffer");
    }
    for (double g : p->grad) {
      if (!std::isfinite(g)) {
        throw NumericError("optimizer_step: non-finite gradient in parameter '" + name + "'");
      }
    }
    if (state.kind == OptKind::SGD) {
      for (size_t i = 0; i < p->values.size(); ++i) {
        p->values[i] -= state.learning_rate * p->grad[i];
      }
    } else {
      auto& mom = state.moments[name];
      if (mom.m.size() != p->values.size()) {
        mom.m.assign(p->values.size(), 0.0);
        mom.v.assign(p->values.size(), 0.0);
      }
      const double b1 = state.beta1, b2 = state.beta2;
      const double bc1 = 1.0 - std::pow(b1, (double)state.step_count);
      const double bc2 = 1.0 - std::pow(b2, (double)state.step_count);
      for (size_t i = 0; i < p->values.size(); ++i) {
        const double g = p->grad[i];
        mom.m[i] = b1 * mom.m[i] + (1.0 - b1) * g;
        mom.v[i] = b2 * mom.v[i] + (1.0 - b2) * g * g;
        const double mhat = mom.m[i] / bc1;
        const double vhat = mom.v[i] / bc2;
        p->values[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
      }
    }
    p->zero_grad();
  }
}

double grad_check(const LossBuilder& build, const NamedParams& params, double eps) {
  if (eps <= 0.0 || eps > 1e-2) throw ContractError("grad_check: eps must be in (0, 1e-2]");

  for (const auto& [name, p] : params) {
    p->set_requires_grad(true);
    p->zero_grad();
  }

  auto eval = [&]() -> double {
    Tape t;
    std::vector<Tape::Ref> refs;
    refs.reserve(params.size());
    for (const auto& [name, p] : params) refs.push_back(t.param(*p));
    return t.scalar_val(build(t, refs));
  };

  // Analytic pass.
  {
    Tape t;
    std::vector<Tape::Ref> refs;
    refs.reserve(params.size());
    for (const auto& [name, p] : params) refs.push_back(t.param(*p));
    t.backward(build(t, refs));
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor* p = params[pi].second;
    for (size_t i = 0; i < p->values.size(); ++i) {
      const double saved = p->values[i];
      p->values[i] = saved + eps;
      const double fp = eval();
      p->values[i] = saved - eps;
      const double fm = eval();
      p->values[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
      worst = std::max(worst, rel);
    }
  }
  for (const auto& [name, p] : params) p->zero_grad();
  return worst;
}

}  // namespace sen
