#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sen/network.hpp"
#include "sen/optim.hpp"
#include "sen/rng.hpp"
#include "sen/signal.hpp"

namespace sen {

struct Pair {
  int i = 0;
  int j = 0;
  int same = 0;  // 1 iff label(i) == label(j)
};

struct PairBatch {
  std::vector<Pair> pairs;
};

struct TrainConfig {
  double sigmoid_k = 10.0;
  int batch_pairs = 128;          // B
  double positive_fraction = 0.5; // in (0,1)
  int epochs = 100;
  double learning_rate = 1e-3;
  OptKind optimizer = OptKind::Adam;
  uint64_t seed = 1;
};

// Plain (non-tape) cosine similarity; throws NumericError on a zero norm.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// sigma_k(phi) if s == 1, else 1 - sigma_k(phi), with
// sigma_k(x) = 1 / (1 + exp(-k x)).
double pair_probability(double phi, int s, double k);

// Negative log likelihood over pairs, evaluated in the overflow-safe
// logit form: J = sum max(z,0) - s z + log(1+exp(-|z|)), z = k phi.
double pairwise_loss(const std::vector<double>& phis, const std::vector<int>& ss, double k);

// Exactly B pairs with round(B * positive_fraction) positives, sampled
// uniformly within the positive / negative ordered-pair pools, no self
// pairs. Throws DataError when the composition is unsatisfiable.
PairBatch sample_pairs(const std::vector<int>& labels, int batch_pairs, double positive_fraction,
                       Rng& rng);

struct TrainResult {
  SENWeights weights;
  std::vector<double> loss_history;  // per-step J
};

// Trains the encoder with the pairwise loss: each step samples a pair
// batch, embeds both members through the same weights, backpropagates J
// and applies the optimizer. One epoch is ceil(N / B) steps.
TrainResult train_sen(const std::vector<InputTensor>& samples, const std::vector<int>& labels,
                      const SENConfig& net_cfg, const TrainConfig& train_cfg);

// Writes a two-column (step, J) delimited file.
void save_loss_history(const std::vector<double>& history, const std::string& path);

}  // namespace sen
