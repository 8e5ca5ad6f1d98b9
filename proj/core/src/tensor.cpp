#include "gekln/tensor.hpp"

#include "gekln/error.hpp"

#include <cmath>
#include <random>

namespace gekln {

std::string shape_string(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  // splitmix64 finalizer over the mixed pair
  std::uint64_t z = fnv1a(label) ^ (base + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix xavier_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeMismatch("xavier_init needs a non-empty shape, got " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::mt19937_64 rng(seed);
  // Map raw 53-bit draws by hand; std::uniform_real_distribution output is
  // implementation-defined and would break cross-toolchain reproducibility.
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    out.data()[i] = (2.0 * u - 1.0) * bound;
  }
  return out;
}

ParameterStore::SlotId ParameterStore::add(std::string name, Matrix value) {
  if (index_.count(name) != 0) throw Error("duplicate parameter slot: " + name);
  const SlotId id = names_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  grads_.push_back(Matrix::Zero(value.rows(), value.cols()));
  values_.push_back(std::move(value));
  return id;
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.find(std::string(name)) != index_.end();
}

ParameterStore::SlotId ParameterStore::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown parameter slot: " + std::string(name));
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& g : grads_) g.setZero();
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

}  // namespace gekln
