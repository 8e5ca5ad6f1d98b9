#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gekln {

// Compressed row lists: segment g owns members[offsets[g] .. offsets[g+1]).
// Used for graph adjacency, the Q-matrix and mean aggregation.
struct SegmentIndex {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> members;

  std::size_t num_segments() const noexcept { return offsets.size() - 1; }
  std::size_t num_members() const noexcept { return members.size(); }
  std::size_t length(std::size_t g) const { return offsets[g + 1] - offsets[g]; }
  std::span<const std::size_t> segment(std::size_t g) const {
    return {members.data() + offsets[g], length(g)};
  }

  void push_segment(std::span<const std::size_t> items) {
    members.insert(members.end(), items.begin(), items.end());
    offsets.push_back(members.size());
  }

  // Groups row positions 0..ids.size()-1 by their segment id.
  static SegmentIndex from_segment_ids(std::span<const std::size_t> ids, std::size_t num_segments);

  bool operator==(const SegmentIndex&) const = default;
};

}  // namespace gekln
