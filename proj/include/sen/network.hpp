#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sen/optim.hpp"
#include "sen/signal.hpp"
#include "sen/tape.hpp"
#include "sen/tensor.hpp"

namespace sen {

struct SENConfig {
  int conv1 = 5;
  int conv2 = 3;
  int conv3 = 3;
  int conv4 = 3;
  int channels = 64;
  int lstm_hidden = 64;  // embedding dimension l
  int k = 6;             // interval count
  int f = 13;            // frequency bins per axis
  uint64_t seed = 1;
};

// Horizontal widths after each conv stage: {f, w1, w2, w3, w4}.
// Throws ConfigError naming the first stage whose output width would be
// non-positive.
std::array<int, 5> stage_widths(const SENConfig& cfg);

struct LstmWeights {
  Tensor W;  // [4*hid x in], gate rows ordered [input|forget|cell|output]
  Tensor U;  // [4*hid x hid]
  Tensor b;  // [4*hid]
};

struct SENWeights {
  SENConfig config;
  Tensor within_f, within_b;    // [C,1,2,conv1], [C]   shared across axes and sensors
  Tensor axis_f, axis_b;        // [C,C,4,conv2], [C]   shared across sensors
  Tensor sensor1_f, sensor1_b;  // [C,C,2,conv3], [C]
  Tensor sensor2_f, sensor2_b;  // [C,C,1,conv4], [C]
  LstmWeights lstm1;            // input C*w4
  LstmWeights lstm2;            // input lstm_hidden

  NamedParams named_params();
};

// Seeded initialization: conv/dense filters uniform in
// +-sqrt(6/(fan_in+fan_out)), LSTM gate matrices uniform in +-sqrt(1/hid),
// biases zero.
SENWeights init_network(const SENConfig& cfg);

// Weight refs bound onto one tape; build once per training step so shared
// weights accumulate gradients across all samples in the step.
struct NetRefs {
  Tape::Ref within_f, within_b;
  Tape::Ref axis_f, axis_b;
  Tape::Ref sensor1_f, sensor1_b;
  Tape::Ref sensor2_f, sensor2_b;
  LstmRefs lstm1, lstm2;
  Tape::Ref h0, c0;  // shared zero initial states
};

NetRefs bind_network(Tape& t, SENWeights& w);
// Read-only binding for inference (weights copied onto the tape as inputs).
NetRefs bind_network_const(Tape& t, const SENWeights& w);

struct EmbedTrace {
  std::array<int, 5> widths{};                     // dimension chain
  std::vector<std::vector<double>> lstm2_outputs;  // per-interval h of layer 2
};

// Hierarchical conv + two LSTM layers + averaging, on the tape.
Tape::Ref embed_on_tape(Tape& t, const InputTensor& x, const NetRefs& refs, const SENConfig& cfg,
                        EmbedTrace* trace = nullptr);

// Forward-only embedding of one sample.
std::vector<double> embed(const InputTensor& x, const SENWeights& w, EmbedTrace* trace = nullptr);

// Row i is embed(xs[i]); order preserved.
std::vector<std::vector<double>> embed_batch(const std::vector<InputTensor>& xs, const SENWeights& w);

}  // namespace sen
