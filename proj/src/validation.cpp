#include "sen/validation.hpp"

#include <cmath>

#include "sen/optim.hpp"
#include "sen/rng.hpp"

namespace sen {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Distinct-weight smooth readout; makes every output coordinate's upstream
// gradient unique so transposition bugs show up.
Tape::Ref readout(Tape& t, Tape::Ref x) {
  const Tensor& v = t.val(x);
  Tensor w = Tensor::zeros(v.shape);
  for (int i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.05 * (double)i;
  return t.sum(t.mul(t.tanh_op(x), t.input(std::move(w))));
}

double check(const LossBuilder& build, const NamedParams& params) {
  return grad_check(build, params, 1e-5);
}

}  // namespace

std::vector<GradCheckEntry> check_op_gradients(uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckEntry> out;

  {
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    out.push_back({"add", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.add(p[0], p[1]));
                   }, {{"a", &a}, {"b", &b}}), false});
  }
  {
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    out.push_back({"sub", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.sub(p[0], p[1]));
                   }, {{"a", &a}, {"b", &b}}), false});
  }
  {
    Tensor a = random_tensor({6}, rng), b = random_tensor({6}, rng);
    out.push_back({"mul", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.mul(p[0], p[1]));
                   }, {{"a", &a}, {"b", &b}}), false});
  }
  {
    Tensor a = random_tensor({5}, rng);
    out.push_back({"scale", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.scale(p[0], -1.7));
                   }, {{"a", &a}}), false});
  }
  {
    Tensor a = random_tensor({4}, rng), b = random_tensor({3}, rng);
    out.push_back({"concat+slice", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     std::vector<Tape::Ref> xs{p[0], p[1]};
                     return readout(t, t.slice(t.concat(xs), 1, 5));
                   }, {{"a", &a}, {"b", &b}}), false});
  }
  {
    Tensor a = random_tensor({2, 1, 4}, rng), b = random_tensor({2, 2, 4}, rng);
    out.push_back({"stack_rows", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     std::vector<Tape::Ref> xs{p[0], p[1]};
                     return readout(t, t.stack_rows(xs));
                   }, {{"a", &a}, {"b", &b}}), false});
  }
  {
    Tensor a = random_tensor({2, 6}, rng);
    out.push_back({"reshape", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.reshape(p[0], {3, 4}));
                   }, {{"a", &a}}), false});
  }
  {
    Tensor w = random_tensor({3, 4}, rng), x = random_tensor({4}, rng);
    out.push_back({"matvec", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.matvec(p[0], p[1]));
                   }, {{"W", &w}, {"x", &x}}), false});
  }
  {
    Tensor w = random_tensor({3, 4}, rng), x = random_tensor({4}, rng), b = random_tensor({3}, rng);
    out.push_back({"dense", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.dense(p[0], p[1], p[2]));
                   }, {{"W", &w}, {"x", &x}, {"b", &b}}), false});
  }
  {
    Tensor in = random_tensor({2, 3, 6}, rng);
    Tensor f = random_tensor({2, 2, 2, 3}, rng);
    Tensor b = random_tensor({2}, rng);
    out.push_back({"conv1d", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.conv1d(p[0], p[1], p[2]));
                   }, {{"in", &in}, {"filt", &f}, {"bias", &b}}), false});
  }
  {
    // Keep pre-activations away from the kink.
    Tensor a = Tensor::zeros({6});
    for (int i = 0; i < 6; ++i) a[i] = (i % 2 == 0 ? 0.4 : -0.6) + 0.1 * (double)i;
    out.push_back({"relu", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.relu(p[0]));
                   }, {{"a", &a}}), false});
  }
  {
    Tensor a = random_tensor({5}, rng);
    out.push_back({"tanh", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.tanh_op(p[0]));
                   }, {{"a", &a}}), true});
  }
  {
    Tensor a = random_tensor({5}, rng);
    out.push_back({"logistic", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.logistic(p[0]));
                   }, {{"a", &a}}), true});
  }
  {
    Tensor a = random_tensor({2, 4}, rng);
    out.push_back({"softmax", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return readout(t, t.softmax(p[0]));
                   }, {{"a", &a}}), true});
  }
  {
    Tensor a = random_tensor({4, 6}, rng), b = random_tensor({4, 6}, rng), c = random_tensor({4, 6}, rng);
    out.push_back({"mean_of", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     std::vector<Tape::Ref> xs{p[0], p[1], p[2]};
                     return readout(t, t.mean_of(xs));
                   }, {{"a", &a}, {"b", &b}, {"c", &c}}), false});
  }
  {
    Tensor a = random_tensor({6}, rng, 0.2, 1.0), b = random_tensor({6}, rng, -1.0, -0.2);
    out.push_back({"cosine", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return t.cosine(p[0], p[1]);
                   }, {{"a", &a}, {"b", &b}}), true});
  }
  {
    Tensor phis = random_tensor({5}, rng, -0.9, 0.9);
    const std::vector<int> s{1, 0, 1, 0, 1};
    out.push_back({"pairwise_nll", check([s](Tape& t, const std::vector<Tape::Ref>& p) {
                     return t.pairwise_nll(p[0], s, 10.0);
                   }, {{"phis", &phis}}), true});
  }
  {
    Tensor logits = random_tensor({4}, rng, -2.0, 2.0);
    out.push_back({"softmax_xent", check([](Tape& t, const std::vector<Tape::Ref>& p) {
                     return t.softmax_xent(p[0], 2);
                   }, {{"logits", &logits}}), true});
  }
  {
    Rng lrng = rng.child("lstm");
    const int in = 3, hid = 4;
    Tensor W = random_tensor({4 * hid, in}, lrng), U = random_tensor({4 * hid, hid}, lrng);
    Tensor b = random_tensor({4 * hid}, lrng);
    Tensor x = random_tensor({in}, lrng), h = random_tensor({hid}, lrng), c = random_tensor({hid}, lrng);
    out.push_back({"lstm_step", check([hid](Tape& t, const std::vector<Tape::Ref>& p) {
                     LstmRefs w{p[0], p[1], p[2]};
                     auto [hn, cn] = lstm_step(t, p[3], p[4], p[5], w, hid);
                     std::vector<Tape::Ref> both{hn, cn};
                     return readout(t, t.concat(both));
                   }, {{"W", &W}, {"U", &U}, {"b", &b}, {"x", &x}, {"h", &h}, {"c", &c}}), false});
  }
  return out;
}

InputTensor random_input_tensor(const SENConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  InputTensor x;
  x.k = cfg.k;
  x.f = cfg.f;
  x.data = Tensor::zeros({cfg.k, 2, 8, cfg.f});
  const int f = cfg.f;
  for (int b = 0; b < cfg.k; ++b) {
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 4; ++a) {
        const size_t base = (((size_t)b * 2 + s) * 8 + 2 * (size_t)a) * f;
        for (int i = 0; i < f; ++i) {
          x.data.values[base + (size_t)i] = rng.uniform(0.0, 3.0);          // magnitudes
          x.data.values[base + (size_t)f + (size_t)i] = (double)i * 25.0 / 24.0;  // bin grid
        }
      }
    }
  }
  return x;
}

double check_sen_composition(const SENConfig& cfg, uint64_t seed, int pairs) {
  std::vector<InputTensor> samples;
  for (int i = 0; i < 2 * pairs; ++i) {
    samples.push_back(random_input_tensor(cfg, splitmix64(seed + (uint64_t)i)));
  }
  std::vector<int> indicators;
  for (int p = 0; p < pairs; ++p) indicators.push_back(p % 2);

  SENWeights weights = init_network(cfg);
  NamedParams params = weights.named_params();

  auto build = [&](Tape& t, const std::vector<Tape::Ref>&) {
    NetRefs refs = bind_network(t, weights);
    std::vector<Tape::Ref> phis;
    for (int p = 0; p < pairs; ++p) {
      Tape::Ref ea = embed_on_tape(t, samples[(size_t)(2 * p)], refs, cfg);
      Tape::Ref eb = embed_on_tape(t, samples[(size_t)(2 * p + 1)], refs, cfg);
      phis.push_back(t.cosine(ea, eb));
    }
    return t.pairwise_nll(t.concat(phis), indicators, 10.0);
  };
  return grad_check(build, params, 1e-5);
}

}  // namespace sen
