#include "gekln/model.hpp"

#include "gekln/error.hpp"

#include <string>

namespace gekln {

void ModelConfig::validate() const {
  if (dim < 1) throw ConfigError("model.dim must be >= 1");
  if (!(alpha >= 0.0)) throw ConfigError("model.alpha must be >= 0");
  if (!(leaky_slope >= 0.0)) throw ConfigError("model.leaky_slope must be >= 0");
}

ad::Var apply_mlp(ad::Var h, ad::Var w1, ad::Var w2, double slope) {
  return ad::leaky_relu(ad::matmul(ad::leaky_relu(ad::matmul(h, w1), slope), w2), slope);
}

namespace {

ad::Var aggregate_side(const SegmentIndex& correct, const SegmentIndex& incorrect, ad::Var self_h, ad::Var other_h,
                       const SideWeights& w, double slope) {
  const std::array<const SegmentIndex*, 2> adj{&incorrect, &correct};
  ad::Var out = apply_mlp(self_h, w.w1[SideWeights::kSelf], w.w2[SideWeights::kSelf], slope);
  for (std::size_t n = 0; n < 2; ++n) {
    const ad::Var transformed = apply_mlp(other_h, w.w1[n], w.w2[n], slope);
    out = ad::add(out, ad::gather_segment_mean(transformed, *adj[n]));
  }
  return out;
}

}  // namespace

std::pair<ad::Var, ad::Var> propagate_layer(const TypedBipartiteGraph& graph, ad::Var h_students,
                                            ad::Var h_exercises, const LayerWeights& weights, double slope) {
  if (static_cast<std::size_t>(h_students.rows()) != graph.num_students() ||
      static_cast<std::size_t>(h_exercises.rows()) != graph.num_exercises() ||
      h_students.cols() != h_exercises.cols()) {
    throw ShapeMismatch("propagate_layer " + shape_string(h_students.value()) + ", " +
                        shape_string(h_exercises.value()) + " on a " + std::to_string(graph.num_students()) + " x " +
                        std::to_string(graph.num_exercises()) + " graph");
  }
  ad::Var next_s = aggregate_side(graph.student_neighbors(1), graph.student_neighbors(0), h_students, h_exercises,
                                  weights.student, slope);
  ad::Var next_p = aggregate_side(graph.exercise_neighbors(1), graph.exercise_neighbors(0), h_exercises, h_students,
                                  weights.exercise, slope);
  return {next_s, next_p};
}

std::pair<Matrix, Matrix> concat_layers(const LayerEmbeddings& layers) {
  if (layers.students.empty() || layers.students.size() != layers.exercises.size()) {
    throw ShapeMismatch("concat_layers needs matching non-empty layer lists");
  }
  const auto concat = [](const std::vector<Matrix>& parts) {
    Eigen::Index cols = 0;
    for (const auto& m : parts) cols += m.cols();
    Matrix out(parts.front().rows(), cols);
    Eigen::Index c = 0;
    for (const auto& m : parts) {
      if (m.rows() != out.rows()) throw ShapeMismatch("concat_layers row counts differ");
      out.middleCols(c, m.cols()) = m;
      c += m.cols();
    }
    return out;
  };
  return {concat(layers.students), concat(layers.exercises)};
}

double score_exercise_space(const Matrix& h_students, const Matrix& h_exercises, std::size_t s, std::size_t p) {
  if (s >= static_cast<std::size_t>(h_students.rows()) || p >= static_cast<std::size_t>(h_exercises.rows())) {
    throw IndexOutOfRange("score_exercise_space (" + std::to_string(s) + ", " + std::to_string(p) + ")");
  }
  return h_students.row(static_cast<Eigen::Index>(s)).dot(h_exercises.row(static_cast<Eigen::Index>(p)));
}

double score_knowledge_space(const Matrix& x, const Matrix& y, const QMatrix& q, std::size_t s, std::size_t p) {
  if (s >= static_cast<std::size_t>(x.rows()) || p >= q.num_exercises()) {
    throw IndexOutOfRange("score_knowledge_space (" + std::to_string(s) + ", " + std::to_string(p) + ")");
  }
  const auto concepts = q.concepts(p);
  if (concepts.empty()) throw EmptyConceptSet(p);
  double acc = 0.0;
  for (std::size_t k : concepts) acc += x.row(static_cast<Eigen::Index>(s)).dot(y.row(static_cast<Eigen::Index>(k)));
  return acc / static_cast<double>(concepts.size());
}

GeklnModel::GeklnModel(ModelConfig config, std::size_t num_students, std::size_t num_exercises,
                       std::size_t num_concepts, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  const auto d = static_cast<Eigen::Index>(config_.dim);
  const auto h = static_cast<Eigen::Index>(config_.hidden());
  // Each slot draws from its own stream, so configurations that share a slot
  // name start from identical values.
  const auto add = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (!params_.contains(name)) params_.add(name, xavier_init(rows, cols, derive_seed(seed, name)));
  };
  add("U", static_cast<Eigen::Index>(num_students), d);
  add("V", static_cast<Eigen::Index>(num_exercises), d);
  if (config_.use_knowledge_head) {
    if (num_concepts == 0) throw ConfigError("knowledge head needs at least one concept");
    add("X", static_cast<Eigen::Index>(num_students), d);
    add("Y", static_cast<Eigen::Index>(num_concepts), d);
  }
  for (std::size_t l = 0; l < config_.effective_layers(); ++l) {
    for (NodeSide side : {NodeSide::student, NodeSide::exercise}) {
      for (std::size_t fn = 0; fn < 3; ++fn) {
        add(mlp_slot(l, side, fn, 1), d, h);
        add(mlp_slot(l, side, fn, 2), h, d);
      }
    }
  }
}

GeklnModel::GeklnModel(ModelConfig config, ParameterStore params) : config_(config), params_(std::move(params)) {
  config_.validate();
  std::vector<std::string> required{"U", "V"};
  if (config_.use_knowledge_head) {
    required.emplace_back("X");
    required.emplace_back("Y");
  }
  for (std::size_t l = 0; l < config_.effective_layers(); ++l) {
    for (NodeSide side : {NodeSide::student, NodeSide::exercise}) {
      for (std::size_t fn = 0; fn < 3; ++fn) {
        required.push_back(mlp_slot(l, side, fn, 1));
        required.push_back(mlp_slot(l, side, fn, 2));
      }
    }
  }
  for (const auto& name : required) {
    if (!params_.contains(name)) throw IncompatibleCheckpoint("parameter slot '" + name + "' missing for this config");
  }
  if (params_.value("U").cols() != static_cast<Eigen::Index>(config_.dim)) {
    throw IncompatibleCheckpoint("embedding width differs from model.dim");
  }
}

std::string GeklnModel::mlp_slot(std::size_t layer, NodeSide side, std::size_t fn, int which) const {
  static constexpr std::array<const char*, 3> kFn{"f0", "f1", "self"};
  std::string name = "gcn.";
  name += config_.share_layers ? "shared" : "layer" + std::to_string(layer);
  name += config_.share_sides ? ".both." : (side == NodeSide::student ? ".student." : ".exercise.");
  name += kFn.at(fn);
  name += which == 1 ? ".w1" : ".w2";
  return name;
}

ad::Var GeklnModel::leaf(ad::Tape& tape, const std::string& name, ParameterStore* bind) const {
  if (bind != nullptr) return tape.parameter(*bind, bind->id(name));
  return tape.constant(params_.value(name));
}

LayerWeights GeklnModel::layer_weights(ad::Tape& tape, std::size_t layer, ParameterStore* bind) const {
  LayerWeights w;
  for (NodeSide side : {NodeSide::student, NodeSide::exercise}) {
    SideWeights& sw = side == NodeSide::student ? w.student : w.exercise;
    for (std::size_t fn = 0; fn < 3; ++fn) {
      sw.w1[fn] = leaf(tape, mlp_slot(layer, side, fn, 1), bind);
      sw.w2[fn] = leaf(tape, mlp_slot(layer, side, fn, 2), bind);
    }
  }
  return w;
}

void GeklnModel::check_graph(const TypedBipartiteGraph& graph) const {
  if (graph.num_students() != num_students() || graph.num_exercises() != num_exercises()) {
    throw ShapeMismatch("graph is " + std::to_string(graph.num_students()) + " x " +
                        std::to_string(graph.num_exercises()) + ", model is " + std::to_string(num_students()) +
                        " x " + std::to_string(num_exercises()));
  }
}

std::pair<std::vector<ad::Var>, std::vector<ad::Var>> GeklnModel::propagate_all(ad::Tape& tape,
                                                                                const TypedBipartiteGraph& graph,
                                                                                ParameterStore* bind) const {
  check_graph(graph);
  std::vector<ad::Var> hs{leaf(tape, "U", bind)};
  std::vector<ad::Var> hp{leaf(tape, "V", bind)};
  for (std::size_t l = 0; l < config_.effective_layers(); ++l) {
    auto [s, p] = propagate_layer(graph, hs.back(), hp.back(), layer_weights(tape, l, bind), config_.leaky_slope);
    hs.push_back(s);
    hp.push_back(p);
  }
  return {std::move(hs), std::move(hp)};
}

ad::Var GeklnModel::forward_impl(ad::Tape& tape, const TypedBipartiteGraph& graph, const QMatrix& q,
                                 std::span<const StudentExercisePair> pairs, ParameterStore* bind) const {
  if (pairs.empty()) throw ShapeMismatch("forward on an empty batch");
  std::vector<std::size_t> students, exercises;
  students.reserve(pairs.size());
  exercises.reserve(pairs.size());
  for (const auto& [s, p] : pairs) {
    students.push_back(s);
    exercises.push_back(p);
  }

  auto [hs, hp] = propagate_all(tape, graph, bind);
  const ad::Var h_students = hs.size() == 1 ? hs.front() : ad::concat_cols(hs);
  const ad::Var h_exercises = hp.size() == 1 ? hp.front() : ad::concat_cols(hp);
  ad::Var pred = ad::inner_product_rows(ad::row_gather(h_students, students), ad::row_gather(h_exercises, exercises));

  if (config_.use_knowledge_head) {
    SegmentIndex batch_concepts;
    for (std::size_t p : exercises) {
      if (p >= q.num_exercises()) throw IndexOutOfRange("exercise " + std::to_string(p) + " outside Q-matrix");
      const auto row = q.concepts(p);
      if (row.empty()) throw EmptyConceptSet(p);
      batch_concepts.push_segment(row);
    }
    const ad::Var y_mean = ad::gather_segment_mean(leaf(tape, "Y", bind), batch_concepts);
    const ad::Var x = ad::row_gather(leaf(tape, "X", bind), students);
    pred = ad::add(pred, ad::scale(ad::inner_product_rows(x, y_mean), config_.alpha));
  }
  return pred;
}

ad::Var GeklnModel::forward(ad::Tape& tape, const TypedBipartiteGraph& graph, const QMatrix& q,
                            std::span<const StudentExercisePair> pairs, bool bind_params) {
  return forward_impl(tape, graph, q, pairs, bind_params ? &params_ : nullptr);
}

std::vector<double> GeklnModel::predict_batch(const TypedBipartiteGraph& graph, const QMatrix& q,
                                              std::span<const StudentExercisePair> pairs) const {
  if (pairs.empty()) return {};
  ad::Tape tape;
  const Matrix& out = forward_impl(tape, graph, q, pairs, nullptr).value();
  return {out.data(), out.data() + out.size()};
}

double GeklnModel::predict(const TypedBipartiteGraph& graph, const QMatrix& q, std::size_t s, std::size_t p) const {
  const StudentExercisePair pair{s, p};
  return predict_batch(graph, q, std::span(&pair, 1)).front();
}

LayerEmbeddings GeklnModel::layer_embeddings(const TypedBipartiteGraph& graph) const {
  ad::Tape tape;
  auto [hs, hp] = propagate_all(tape, graph, nullptr);
  LayerEmbeddings out;
  for (const auto& v : hs) out.students.push_back(v.value());
  for (const auto& v : hp) out.exercises.push_back(v.value());
  return out;
}

}  // namespace gekln
