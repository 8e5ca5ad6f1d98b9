#pragma once

#include "gekln/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gekln {

enum class OptimizerKind { adaptive, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adaptive;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected adaptive-moment update (Adam) or plain gradient descent.
// Moment buffers are created lazily to match the store's slots.
struct OptimizerState {
  OptimizerSettings settings;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Applies one update from the store's gradients, then zeroes them.
void optimizer_step(ParameterStore& store, OptimizerState& state);

}  // namespace gekln
