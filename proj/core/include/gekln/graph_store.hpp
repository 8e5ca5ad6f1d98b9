#pragma once

#include "gekln/data_ingest.hpp"
#include "gekln/segments.hpp"

#include <array>
#include <cstddef>
#include <ostream>
#include <span>

namespace gekln {

enum class NodeSide { student, exercise };

// Student/exercise adjacency split by link type: type 1 = answered correctly,
// type 0 = answered incorrectly. Neighbor lists are sorted and duplicate-free.
class TypedBipartiteGraph {
 public:
  static constexpr std::size_t kLinkTypes = 2;

  TypedBipartiteGraph() = default;
  TypedBipartiteGraph(std::size_t num_students, std::size_t num_exercises,
                      std::array<SegmentIndex, kLinkTypes> student_neighbors,
                      std::array<SegmentIndex, kLinkTypes> exercise_neighbors);

  std::size_t num_students() const noexcept { return num_students_; }
  std::size_t num_exercises() const noexcept { return num_exercises_; }

  // Exercises linked to student s by `link_type`.
  const SegmentIndex& student_neighbors(int link_type) const { return student_neighbors_.at(link_type); }
  // Students linked to exercise p by `link_type`.
  const SegmentIndex& exercise_neighbors(int link_type) const { return exercise_neighbors_.at(link_type); }
  const SegmentIndex& neighbors(NodeSide side, int link_type) const {
    return side == NodeSide::student ? student_neighbors(link_type) : exercise_neighbors(link_type);
  }

  std::size_t edge_count(int link_type) const { return student_neighbors(link_type).num_members(); }
  std::size_t edge_count() const { return edge_count(0) + edge_count(1); }

  bool operator==(const TypedBipartiteGraph&) const = default;

 private:
  std::size_t num_students_ = 0;
  std::size_t num_exercises_ = 0;
  std::array<SegmentIndex, kLinkTypes> student_neighbors_;
  std::array<SegmentIndex, kLinkTypes> exercise_neighbors_;
};

// One edge per distinct (student, exercise, score); train logs only.
TypedBipartiteGraph build_graph(std::span<const InteractionLog> train_logs, std::size_t num_students,
                                std::size_t num_exercises);

std::size_t degree(const TypedBipartiteGraph& graph, NodeSide side, std::size_t node, int link_type);

// Debug dump as `s,p,type` rows, sorted by type, student, exercise.
void write_edge_list_csv(const TypedBipartiteGraph& graph, std::ostream& out);

}  // namespace gekln
