#include "sen/network.hpp"

#include <cmath>
#include <string>

#include "sen/errors.hpp"
#include "sen/rng.hpp"

namespace sen {

namespace {

void validate_config(const SENConfig& cfg) {
  if (cfg.channels < 1) throw ConfigError("channels must be >= 1");
  if (cfg.lstm_hidden < 2) throw ConfigError("lstm_hidden must be >= 2");
  if (cfg.k < 1) throw ConfigError("interval count k must be >= 1");
  if (cfg.f < 2) throw ConfigError("frequency bin count f must be >= 2");
  if (cfg.conv1 < 1 || cfg.conv2 < 1 || cfg.conv3 < 1 || cfg.conv4 < 1) {
    throw ConfigError("conv widths must be >= 1");
  }
  stage_widths(cfg);
}

Tensor glorot(Shape shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = std::sqrt(6.0 / (double)(fan_in + fan_out));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

LstmWeights init_lstm(int in, int hid, Rng& rng) {
  LstmWeights w;
  const double bound = std::sqrt(1.0 / (double)hid);
  w.W = Tensor::zeros({4 * hid, in});
  w.U = Tensor::zeros({4 * hid, hid});
  w.b = Tensor::zeros({4 * hid});
  for (double& v : w.W.values) v = rng.uniform(-bound, bound);
  for (double& v : w.U.values) v = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

std::array<int, 5> stage_widths(const SENConfig& cfg) {
  std::array<int, 5> w{};
  w[0] = cfg.f;
  w[1] = w[0] - cfg.conv1 + 1;
  w[2] = w[1] - cfg.conv2 + 1;
  w[3] = w[2] - cfg.conv3 + 1;
  w[4] = w[3] - cfg.conv4 + 1;
  static const char* stages[4] = {"within-axis", "axis-merge", "sensor-merge-1", "sensor-merge-2"};
  for (int i = 1; i < 5; ++i) {
    if (w[(size_t)i] < 1) {
      throw ConfigError(std::string("conv stage '") + stages[i - 1] + "' output width " +
                        std::to_string(w[(size_t)i]) + " is not positive (input width " +
                        std::to_string(w[(size_t)i - 1]) + ")");
    }
  }
  return w;
}

NamedParams SENWeights::named_params() {
  return {
      {"within.filters", &within_f},   {"within.bias", &within_b},
      {"axis.filters", &axis_f},       {"axis.bias", &axis_b},
      {"sensor1.filters", &sensor1_f}, {"sensor1.bias", &sensor1_b},
      {"sensor2.filters", &sensor2_f}, {"sensor2.bias", &sensor2_b},
      {"lstm1.W", &lstm1.W},           {"lstm1.U", &lstm1.U},
      {"lstm1.b", &lstm1.b},           {"lstm2.W", &lstm2.W},
      {"lstm2.U", &lstm2.U},           {"lstm2.b", &lstm2.b},
  };
}

SENWeights init_network(const SENConfig& cfg) {
  validate_config(cfg);
  const auto widths = stage_widths(cfg);
  const int C = cfg.channels;
  const int l = cfg.lstm_hidden;
  Rng rng = Rng(cfg.seed).child("init");

  SENWeights w;
  w.config = cfg;
  // Small positive conv biases keep the ReLU stages alive at init (an
  // all-negative window would otherwise pin later stages exactly on the
  // ReLU kink).
  w.within_f = glorot({C, 1, 2, cfg.conv1}, 2 * cfg.conv1, C * 2 * cfg.conv1, rng);
  w.within_b = Tensor::full({C}, 0.01);
  w.axis_f = glorot({C, C, 4, cfg.conv2}, C * 4 * cfg.conv2, C * 4 * cfg.conv2, rng);
  w.axis_b = Tensor::full({C}, 0.01);
  w.sensor1_f = glorot({C, C, 2, cfg.conv3}, C * 2 * cfg.conv3, C * 2 * cfg.conv3, rng);
  w.sensor1_b = Tensor::full({C}, 0.01);
  w.sensor2_f = glorot({C, C, 1, cfg.conv4}, C * cfg.conv4, C * cfg.conv4, rng);
  w.sensor2_b = Tensor::full({C}, 0.01);
  w.lstm1 = init_lstm(C * widths[4], l, rng);
  w.lstm2 = init_lstm(l, l, rng);
  return w;
}

NetRefs bind_network(Tape& t, SENWeights& w) {
  NetRefs r;
  r.within_f = t.param(w.within_f);
  r.within_b = t.param(w.within_b);
  r.axis_f = t.param(w.axis_f);
  r.axis_b = t.param(w.axis_b);
  r.sensor1_f = t.param(w.sensor1_f);
  r.sensor1_b = t.param(w.sensor1_b);
  r.sensor2_f = t.param(w.sensor2_f);
  r.sensor2_b = t.param(w.sensor2_b);
  r.lstm1 = {t.param(w.lstm1.W), t.param(w.lstm1.U), t.param(w.lstm1.b)};
  r.lstm2 = {t.param(w.lstm2.W), t.param(w.lstm2.U), t.param(w.lstm2.b)};
  r.h0 = t.input(Tensor::zeros({w.config.lstm_hidden}));
  r.c0 = t.input(Tensor::zeros({w.config.lstm_hidden}));
  return r;
}

NetRefs bind_network_const(Tape& t, const SENWeights& w) {
  NetRefs r;
  r.within_f = t.input(w.within_f);
  r.within_b = t.input(w.within_b);
  r.axis_f = t.input(w.axis_f);
  r.axis_b = t.input(w.axis_b);
  r.sensor1_f = t.input(w.sensor1_f);
  r.sensor1_b = t.input(w.sensor1_b);
  r.sensor2_f = t.input(w.sensor2_f);
  r.sensor2_b = t.input(w.sensor2_b);
  r.lstm1 = {t.input(w.lstm1.W), t.input(w.lstm1.U), t.input(w.lstm1.b)};
  r.lstm2 = {t.input(w.lstm2.W), t.input(w.lstm2.U), t.input(w.lstm2.b)};
  r.h0 = t.input(Tensor::zeros({w.config.lstm_hidden}));
  r.c0 = t.input(Tensor::zeros({w.config.lstm_hidden}));
  return r;
}

Tape::Ref embed_on_tape(Tape& t, const InputTensor& x, const NetRefs& refs, const SENConfig& cfg,
                        EmbedTrace* trace) {
  const int axes = 4;
  const Shape expected{cfg.k, 2, 2 * axes, cfg.f};
  if (x.data.shape != expected) {
    throw DimensionError("embed: input tensor " + shape_str(x.data.shape) + " does not match config " +
                         shape_str(expected));
  }
  const auto widths = stage_widths(cfg);
  if (trace) {
    trace->widths = widths;
    trace->lstm2_outputs.clear();
  }
  const int f = cfg.f;
  const int l = cfg.lstm_hidden;

  // Hierarchical convolutions, interval by interval.
  std::vector<Tape::Ref> interval_vecs;
  interval_vecs.reserve((size_t)cfg.k);
  for (int b = 0; b < cfg.k; ++b) {
    std::array<Tape::Ref, 2> sensor_out;
    for (int si = 0; si < 2; ++si) {
      std::vector<Tape::Ref> axis_out;
      axis_out.reserve(axes);
      for (int a = 0; a < axes; ++a) {
        const size_t base = (((size_t)b * 2 + si) * 2 * axes + 2 * (size_t)a) * f;
        std::vector<double> pair(x.data.values.begin() + base, x.data.values.begin() + base + 2 * (size_t)f);
        Tape::Ref axis_in = t.input({1, 2, f}, std::move(pair));
        axis_out.push_back(t.relu(t.conv1d(axis_in, refs.within_f, refs.within_b)));
      }
      Tape::Ref stacked = t.stack_rows(axis_out);  // [C,4,w1]
      sensor_out[(size_t)si] = t.relu(t.conv1d(stacked, refs.axis_f, refs.axis_b));  // [C,1,w2]
    }
    Tape::Ref merged = t.stack_rows(std::span<const Tape::Ref>(sensor_out.data(), 2));  // [C,2,w2]
    Tape::Ref s1 = t.relu(t.conv1d(merged, refs.sensor1_f, refs.sensor1_b));            // [C,1,w3]
    Tape::Ref s2 = t.relu(t.conv1d(s1, refs.sensor2_f, refs.sensor2_b));                // [C,1,w4]
    interval_vecs.push_back(t.reshape(s2, {cfg.channels * widths[4]}));
  }

  // Two LSTM layers across intervals, zero initial states.
  std::vector<Tape::Ref> layer2;
  layer2.reserve((size_t)cfg.k);
  Tape::Ref h1 = refs.h0, c1 = refs.c0, h2 = refs.h0, c2 = refs.c0;
  for (int b = 0; b < cfg.k; ++b) {
    auto [nh1, nc1] = lstm_step(t, interval_vecs[(size_t)b], h1, c1, refs.lstm1, l);
    h1 = nh1;
    c1 = nc1;
    auto [nh2, nc2] = lstm_step(t, h1, h2, c2, refs.lstm2, l);
    h2 = nh2;
    c2 = nc2;
    layer2.push_back(h2);
    if (trace) trace->lstm2_outputs.push_back(t.val(h2).values);
  }
  return t.mean_of(layer2);
}

std::vector<double> embed(const InputTensor& x, const SENWeights& w, EmbedTrace* trace) {
  Tape t;
  NetRefs refs = bind_network_const(t, w);
  Tape::Ref e = embed_on_tape(t, x, refs, w.config, trace);
  return t.val(e).values;
}

std::vector<std::vector<double>> embed_batch(const std::vector<InputTensor>& xs, const SENWeights& w) {
  std::vector<std::vector<double>> rows;
  rows.reserve(xs.size());
  for (const InputTensor& x : xs) rows.push_back(embed(x, w));
  return rows;
}

}  // namespace sen
