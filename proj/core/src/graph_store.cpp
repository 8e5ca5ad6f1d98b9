#include "gekln/graph_store.hpp"

#include "gekln/error.hpp"

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace gekln {

TypedBipartiteGraph::TypedBipartiteGraph(std::size_t num_students, std::size_t num_exercises,
                                         std::array<SegmentIndex, kLinkTypes> student_neighbors,
                                         std::array<SegmentIndex, kLinkTypes> exercise_neighbors)
    : num_students_(num_students),
      num_exercises_(num_exercises),
      student_neighbors_(std::move(student_neighbors)),
      exercise_neighbors_(std::move(exercise_neighbors)) {}

namespace {

// Builds sorted CSR rows from (row, col) pairs that are already unique.
SegmentIndex rows_from_pairs(std::vector<std::pair<std::size_t, std::size_t>> pairs, std::size_t num_rows) {
  std::sort(pairs.begin(), pairs.end());
  SegmentIndex out;
  out.offsets.assign(num_rows + 1, 0);
  out.members.reserve(pairs.size());
  for (const auto& [row, col] : pairs) {
    ++out.offsets[row + 1];
    out.members.push_back(col);
  }
  for (std::size_t r = 0; r < num_rows; ++r) out.offsets[r + 1] += out.offsets[r];
  return out;
}

}  // namespace

TypedBipartiteGraph build_graph(std::span<const InteractionLog> train_logs, std::size_t num_students,
                                std::size_t num_exercises) {
  std::array<std::vector<std::pair<std::size_t, std::size_t>>, TypedBipartiteGraph::kLinkTypes> edges;
  for (const auto& log : train_logs) {
    if (log.student >= num_students || log.exercise >= num_exercises) {
      throw IndexOutOfRange("log (" + std::to_string(log.student) + ", " + std::to_string(log.exercise) +
                            ") outside " + std::to_string(num_students) + " x " + std::to_string(num_exercises));
    }
    if (log.score != 0 && log.score != 1) throw IndexOutOfRange("link type " + std::to_string(log.score));
    edges[static_cast<std::size_t>(log.score)].emplace_back(log.student, log.exercise);
  }

  std::array<SegmentIndex, TypedBipartiteGraph::kLinkTypes> by_student, by_exercise;
  for (std::size_t n = 0; n < TypedBipartiteGraph::kLinkTypes; ++n) {
    auto& e = edges[n];
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    std::vector<std::pair<std::size_t, std::size_t>> flipped;
    flipped.reserve(e.size());
    for (const auto& [s, p] : e) flipped.emplace_back(p, s);
    by_student[n] = rows_from_pairs(std::move(e), num_students);
    by_exercise[n] = rows_from_pairs(std::move(flipped), num_exercises);
  }
  return TypedBipartiteGraph(num_students, num_exercises, std::move(by_student), std::move(by_exercise));
}

std::size_t degree(const TypedBipartiteGraph& graph, NodeSide side, std::size_t node, int link_type) {
  const SegmentIndex& adj = graph.neighbors(side, link_type);
  if (node >= adj.num_segments()) throw IndexOutOfRange("node " + std::to_string(node));
  return adj.length(node);
}

void write_edge_list_csv(const TypedBipartiteGraph& graph, std::ostream& out) {
  out << "s,p,type\n";
  for (int n = 0; n < static_cast<int>(TypedBipartiteGraph::kLinkTypes); ++n) {
    const SegmentIndex& adj = graph.student_neighbors(n);
    for (std::size_t s = 0; s < adj.num_segments(); ++s) {
      for (std::size_t p : adj.segment(s)) out << s << ',' << p << ',' << n << '\n';
    }
  }
}

}  // namespace gekln
