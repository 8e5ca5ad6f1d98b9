#pragma once

#include "gekln/data_ingest.hpp"
#include "gekln/model.hpp"
#include "gekln/optimizer.hpp"
#include "gekln/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>

namespace gekln {

// Per-student mean train score; unseen students fall back to the global mean.
class StudentAverageModel {
 public:
  StudentAverageModel() = default;
  explicit StudentAverageModel(ParameterStore params);

  static StudentAverageModel fit(std::span<const InteractionLog> train, std::size_t num_students);

  double predict(std::size_t student, std::size_t exercise) const;
  double global_mean() const { return params_.value("global_mean")(0, 0); }
  const ParameterStore& params() const noexcept { return params_; }

 private:
  // "student_mean": M x 1 (NaN marks no history), "global_mean": 1 x 1.
  ParameterStore params_;
};

struct IrtConfig {
  std::size_t epochs = 200;
  double lr = 0.01;
  bool two_parameter = false;  // per-exercise discrimination
  OptimizerKind optimizer = OptimizerKind::adaptive;
};

// Logistic item response model: P(correct) = sigmoid(a_p (theta_s - beta_p)).
class IrtModel {
 public:
  IrtModel(std::size_t num_students, std::size_t num_exercises, bool two_parameter);
  explicit IrtModel(ParameterStore params);

  // Minimises mean Bernoulli cross-entropy over `train` by full-batch descent.
  static IrtModel fit(std::span<const InteractionLog> train, std::size_t num_students, std::size_t num_exercises,
                      const IrtConfig& config);

  double logit(std::size_t student, std::size_t exercise) const;
  double predict(std::size_t student, std::size_t exercise) const;

  bool two_parameter() const { return params_.contains("discrimination"); }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

 private:
  ParameterStore params_;
};

enum class BaselineKind { mf, mf_tem, rgcn };

// Graph-EKLN configurations for the ablation rows: MF drops both the graph
// and the knowledge head, MF-TEM keeps only the knowledge head, R-GCN keeps
// only the graph.
ModelConfig make_baseline(BaselineKind kind, ModelConfig base = {});

}  // namespace gekln
