#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sen/network.hpp"

namespace sen {

struct GradCheckEntry {
  std::string name;
  double rel_err = 0.0;
  bool smooth_scalar = false;  // held to the tighter 1e-6 bound
};

// Finite-difference checks for every differentiable tape op, each against
// a weighted nonlinear readout so index bugs cannot cancel.
std::vector<GradCheckEntry> check_op_gradients(uint64_t seed);

// Full encoder + pairwise loss composition at the given config.
double check_sen_composition(const SENConfig& cfg, uint64_t seed, int pairs = 3);

// Random input tensor matching a config (magnitude rows non-negative,
// frequency rows on the bin grid).
InputTensor random_input_tensor(const SENConfig& cfg, uint64_t seed);

}  // namespace sen
