#pragma once

#include <filesystem>

#include "lusgate/network.hpp"

namespace lusgate {

// Versioned binary container: canonical spec text, spec hash, train metadata,
// then one little-endian f64 block per trainable layer (weights, biases).
// Round-trips bit-exactly.
void save_model(const nn::ModelParams& params, const std::filesystem::path& path);
nn::ModelParams load_model(const std::filesystem::path& path);

}  // namespace lusgate
