#pragma once

// Dense-algebra reference for one propagation layer and the fused score,
// written against raw matrices only.

#include "gekln/model.hpp"
#include "support/oracles.hpp"

#include <array>
#include <tuple>
#include <vector>

namespace oracle {

// W1/W2 for F_0, F_1, F (index 2) of one side.
struct DenseSide {
  std::array<Matrix, 3> w1, w2;
};

inline DenseSide random_side(std::mt19937_64& rng, Eigen::Index d, Eigen::Index h) {
  DenseSide s;
  for (int f = 0; f < 3; ++f) {
    s.w1[f] = random_matrix(d, h, rng);
    s.w2[f] = random_matrix(h, d, rng);
  }
  return s;
}

// sum_n D_n^-1 A_n F_n(H_other) + F(H_self)
inline Matrix dense_propagate(const Matrix& self_h, const Matrix& other_h, const std::array<Matrix, 2>& adjacency,
                              const DenseSide& w, double slope) {
  Matrix out = mlp(self_h, w.w1[2], w.w2[2], slope);
  for (int n = 0; n < 2; ++n) out += naive_matmul(row_normalize(adjacency[n]), mlp(other_h, w.w1[n], w.w2[n], slope));
  return out;
}

inline gekln::SideWeights side_vars(gekln::ad::Tape& tape, const DenseSide& s) {
  gekln::SideWeights w;
  for (int f = 0; f < 3; ++f) {
    w.w1[f] = tape.constant(s.w1[f]);
    w.w2[f] = tape.constant(s.w2[f]);
  }
  return w;
}

// Plain u_s . v_p from the store, no model code involved.
inline double plain_mf(const gekln::ParameterStore& params, std::size_t s, std::size_t p) {
  const Matrix& u = params.value("U");
  const Matrix& v = params.value("V");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < u.cols(); ++k) acc += u(static_cast<Eigen::Index>(s), k) * v(static_cast<Eigen::Index>(p), k);
  return acc;
}

inline double knowledge_loop(const gekln::ParameterStore& params, const gekln::QMatrix& q, std::size_t s,
                             std::size_t p) {
  const Matrix& x = params.value("X");
  const Matrix& y = params.value("Y");
  double acc = 0.0;
  for (std::size_t k : q.concepts(p)) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) acc += x(static_cast<Eigen::Index>(s), c) * y(static_cast<Eigen::Index>(k), c);
  }
  return acc / static_cast<double>(q.concepts(p).size());
}

// Full forward of the fused model with dense algebra over the store's slots.
inline std::vector<double> dense_model_predict(const gekln::GeklnModel& model, const gekln::TypedBipartiteGraph& g,
                                               const gekln::QMatrix& q,
                                               const std::vector<gekln::StudentExercisePair>& pairs) {
  const auto& cfg = model.config();
  const auto& params = model.params();
  std::vector<std::tuple<std::size_t, std::size_t, int>> edges;
  for (int n = 0; n < 2; ++n)
    for (std::size_t s = 0; s < g.num_students(); ++s)
      for (std::size_t p : g.student_neighbors(n).segment(s)) edges.emplace_back(s, p, n);
  std::array<Matrix, 2> a_s, a_p;
  for (int n = 0; n < 2; ++n) {
    a_s[n] = dense_adjacency(edges, g.num_students(), g.num_exercises(), n, true);
    a_p[n] = dense_adjacency(edges, g.num_exercises(), g.num_students(), n, false);
  }
  std::vector<Matrix> hs{params.value("U")}, hp{params.value("V")};
  for (std::size_t l = 0; l < cfg.effective_layers(); ++l) {
    DenseSide ws, wp;
    for (std::size_t f = 0; f < 3; ++f) {
      ws.w1[f] = params.value(model.mlp_slot(l, gekln::NodeSide::student, f, 1));
      ws.w2[f] = params.value(model.mlp_slot(l, gekln::NodeSide::student, f, 2));
      wp.w1[f] = params.value(model.mlp_slot(l, gekln::NodeSide::exercise, f, 1));
      wp.w2[f] = params.value(model.mlp_slot(l, gekln::NodeSide::exercise, f, 2));
    }
    const Matrix next_s = dense_propagate(hs.back(), hp.back(), a_s, ws, cfg.leaky_slope);
    const Matrix next_p = dense_propagate(hp.back(), hs.back(), a_p, wp, cfg.leaky_slope);
    hs.push_back(next_s);
    hp.push_back(next_p);
  }
  std::vector<double> out;
  for (const auto& [s, p] : pairs) {
    double r = 0.0;
    for (std::size_t l = 0; l < hs.size(); ++l)
      for (Eigen::Index c = 0; c < hs[l].cols(); ++c)
        r += hs[l](static_cast<Eigen::Index>(s), c) * hp[l](static_cast<Eigen::Index>(p), c);
    if (cfg.use_knowledge_head) r += cfg.alpha * knowledge_loop(params, q, s, p);
    out.push_back(r);
  }
  return out;
}

}  // namespace oracle
