#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gekln {

// Dense row-major real matrix. Vectors are n x 1.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_string(const Matrix& m);

// 64-bit FNV-1a. Stable across platforms; used for seeds, cache keys and
// dataset fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Derives an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

// Uniform Xavier/Glorot init on [-b, b], b = sqrt(6 / (fan_in + fan_out)).
// fan_in is the column count, fan_out the row count (torch convention for 2-D).
Matrix xavier_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

// Named learnable tensors, each with a same-shape gradient accumulator.
class ParameterStore {
 public:
  using SlotId = std::size_t;

  SlotId add(std::string name, Matrix value);
  bool contains(std::string_view name) const;
  SlotId id(std::string_view name) const;

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(SlotId id) const { return names_.at(id); }

  Matrix& value(SlotId id) { return values_.at(id); }
  const Matrix& value(SlotId id) const { return values_.at(id); }
  Matrix& value(std::string_view name) { return values_.at(id(name)); }
  const Matrix& value(std::string_view name) const { return values_.at(id(name)); }

  Matrix& grad(SlotId id) { return grads_.at(id); }
  const Matrix& grad(SlotId id) const { return grads_.at(id); }
  const Matrix& grad(std::string_view name) const { return grads_.at(id(name)); }

  void zero_grad();
  std::size_t parameter_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<Matrix> grads_;
  std::unordered_map<std::string, SlotId> index_;
};

}  // namespace gekln
