#pragma once

#include <string>

#include "sen/network.hpp"

namespace sen {

// Versioned container (magic "SENW"): config block followed by named
// little-endian 64-bit parameter tensors.
void checkpoint_save(const SENWeights& weights, const std::string& path);

// Validates version and every tensor's shape against the stored config;
// errors name the offending field.
SENWeights checkpoint_load(const std::string& path);

}  // namespace sen
