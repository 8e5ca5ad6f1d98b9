#pragma once

#include "gekln/optimizer.hpp"
#include "gekln/tensor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gekln {

// On-disk layout: a "GEKLN-CKPT 1" line, one line of JSON metadata, then a
// binary payload with every parameter slot (name, shape, raw doubles), the
// optimizer moments and step, named auxiliary tensors and the RNG state.
struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  ParameterStore params;
  OptimizerState optimizer;
  std::vector<std::pair<std::string, Matrix>> aux;
  std::string rng_state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Reads only the metadata line.
nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path);

}  // namespace gekln
