#pragma once

#include "gekln/data_ingest.hpp"
#include "gekln/graph_store.hpp"
#include "gekln/tape.hpp"
#include "gekln/tensor.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gekln {

struct ModelConfig {
  std::size_t dim = 128;
  std::size_t layers = 2;
  double alpha = 1.0;
  std::size_t mlp_hidden = 0;  // 0: same as dim
  double leaky_slope = 0.01;
  bool use_gcn = true;
  bool use_knowledge_head = true;
  // Weight sharing of the aggregation MLPs; both off means one set per layer
  // and per target side.
  bool share_layers = false;
  bool share_sides = false;

  void validate() const;
  std::size_t hidden() const noexcept { return mlp_hidden == 0 ? dim : mlp_hidden; }
  std::size_t effective_layers() const noexcept { return use_gcn ? layers : 0; }
};

using StudentExercisePair = std::pair<std::size_t, std::size_t>;

// The three aggregation functions of one target side: F_0 (incorrect-link
// neighbors), F_1 (correct-link neighbors) and the self transform F. Each is
// x -> act(act(x W1) W2).
struct SideWeights {
  std::array<ad::Var, 3> w1;
  std::array<ad::Var, 3> w2;
  static constexpr std::size_t kSelf = 2;
};

struct LayerWeights {
  SideWeights student;
  SideWeights exercise;
};

ad::Var apply_mlp(ad::Var h, ad::Var w1, ad::Var w2, double slope);

// One propagation step over the typed graph:
//   h_s' = sum_n mean_{p in N_s^n} F_n(h_p) + F(h_s)
// and symmetrically for exercises. Empty neighbor sets contribute zero.
std::pair<ad::Var, ad::Var> propagate_layer(const TypedBipartiteGraph& graph, ad::Var h_students,
                                            ad::Var h_exercises, const LayerWeights& weights, double slope);

struct LayerEmbeddings {
  std::vector<Matrix> students;   // l = 0..L, each M x D
  std::vector<Matrix> exercises;  // l = 0..L, each N x D
};

// Row-wise concatenation in layer order.
std::pair<Matrix, Matrix> concat_layers(const LayerEmbeddings& layers);

double score_exercise_space(const Matrix& h_students, const Matrix& h_exercises, std::size_t s, std::size_t p);
// Mean of x_s . y_k over the concepts of exercise p.
double score_knowledge_space(const Matrix& x, const Matrix& y, const QMatrix& q, std::size_t s, std::size_t p);

// Parameters and forward computation of the fused predictor
//   r_sp = <H_s[s], H_p[p]> + alpha * mean_{k in K_p} <x_s, y_k>.
class GeklnModel {
 public:
  GeklnModel(ModelConfig config, std::size_t num_students, std::size_t num_exercises, std::size_t num_concepts,
             std::uint64_t seed);
  // Wraps existing parameters (e.g. from a checkpoint); slot layout must match.
  GeklnModel(ModelConfig config, ParameterStore params);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }
  std::size_t num_students() const { return static_cast<std::size_t>(params_.value("U").rows()); }
  std::size_t num_exercises() const { return static_cast<std::size_t>(params_.value("V").rows()); }

  // Slot name of an MLP weight; `fn` is 0, 1 or SideWeights::kSelf.
  std::string mlp_slot(std::size_t layer, NodeSide side, std::size_t fn, int which) const;

  // Records the batch predictions (n x 1) on `tape`. With `bind_params` the
  // leaves accumulate into this model's gradient slots.
  ad::Var forward(ad::Tape& tape, const TypedBipartiteGraph& graph, const QMatrix& q,
                  std::span<const StudentExercisePair> pairs, bool bind_params = true);

  // Frozen inference; embeddings are computed once per call.
  std::vector<double> predict_batch(const TypedBipartiteGraph& graph, const QMatrix& q,
                                    std::span<const StudentExercisePair> pairs) const;
  double predict(const TypedBipartiteGraph& graph, const QMatrix& q, std::size_t s, std::size_t p) const;

  LayerEmbeddings layer_embeddings(const TypedBipartiteGraph& graph) const;

 private:
  // `bind` null: leaves are constants (frozen inference).
  ad::Var leaf(ad::Tape& tape, const std::string& name, ParameterStore* bind) const;
  LayerWeights layer_weights(ad::Tape& tape, std::size_t layer, ParameterStore* bind) const;
  std::pair<std::vector<ad::Var>, std::vector<ad::Var>> propagate_all(ad::Tape& tape, const TypedBipartiteGraph& graph,
                                                                      ParameterStore* bind) const;
  ad::Var forward_impl(ad::Tape& tape, const TypedBipartiteGraph& graph, const QMatrix& q,
                       std::span<const StudentExercisePair> pairs, ParameterStore* bind) const;
  void check_graph(const TypedBipartiteGraph& graph) const;

  ModelConfig config_;
  ParameterStore params_;
};

}  // namespace gekln
