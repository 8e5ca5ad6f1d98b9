#include "gekln/optimizer.hpp"

#include "gekln/error.hpp"

#include <cmath>

namespace gekln {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adaptive"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adaptive" || name == "adam") return OptimizerKind::adaptive;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adaptive or sgd)");
}

void optimizer_step(ParameterStore& store, OptimizerState& state) {
  const auto& s = state.settings;
  ++state.step;
  if (s.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < store.size(); ++i) store.value(i) -= s.lr * store.grad(i);
    store.zero_grad();
    return;
  }
  while (state.first_moment.size() < store.size()) {
    const Matrix& v = store.value(state.first_moment.size());
    state.first_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
    state.second_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    Matrix& p = store.value(i);
    const Matrix& g = store.grad(i);
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double gk = g.data()[k];
      double& mk = m.data()[k];
      double& vk = v.data()[k];
      mk = s.beta1 * mk + (1.0 - s.beta1) * gk;
      vk = s.beta2 * vk + (1.0 - s.beta2) * gk * gk;
      p.data()[k] -= s.lr * (mk / c1) / (std::sqrt(vk / c2) + s.epsilon);
    }
  }
  store.zero_grad();
}

}  // namespace gekln
