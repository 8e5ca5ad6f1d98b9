#include "doctest.h"

#include "gekln/error.hpp"
#include "gekln/graph_store.hpp"
#include "gekln/random.hpp"
#include "support/oracles.hpp"

#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

using namespace gekln;

namespace {

std::vector<std::size_t> as_vec(std::span<const std::size_t> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("typed edges are stored in both directions") {
  const std::vector<InteractionLog> logs{{0, 0, 1}, {0, 1, 0}};
  const auto g = build_graph(logs, 2, 2);
  CHECK(as_vec(g.student_neighbors(1).segment(0)) == std::vector<std::size_t>{0});
  CHECK(as_vec(g.student_neighbors(0).segment(0)) == std::vector<std::size_t>{1});
  CHECK(as_vec(g.exercise_neighbors(1).segment(0)) == std::vector<std::size_t>{0});
  CHECK(degree(g, NodeSide::student, 0, 1) == 1);
  CHECK(degree(g, NodeSide::student, 0, 0) == 1);
  CHECK(degree(g, NodeSide::student, 1, 0) == 0);
  CHECK(degree(g, NodeSide::student, 1, 1) == 0);
}

TEST_CASE("repeated logs give a single edge; contradictory logs give one per type") {
  const std::vector<InteractionLog> repeated{{0, 0, 1}, {0, 0, 1}};
  CHECK(build_graph(repeated, 1, 1).edge_count() == 1);
  const std::vector<InteractionLog> contradictory{{0, 0, 1}, {0, 0, 0}, {0, 0, 1}};
  const auto g = build_graph(contradictory, 1, 1);
  CHECK(g.edge_count(0) == 1);
  CHECK(g.edge_count(1) == 1);
}

TEST_CASE("out-of-range logs are rejected") {
  const std::vector<InteractionLog> logs{{3, 0, 1}};
  CHECK_THROWS_AS(build_graph(logs, 2, 2), IndexOutOfRange);
  CHECK_THROWS_AS(degree(build_graph({}, 2, 2), NodeSide::exercise, 5, 0), IndexOutOfRange);
}

TEST_CASE("degrees, edge counts and handshake match a brute-force recount") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + rng() % 12, n = 1 + rng() % 12;
    std::vector<InteractionLog> logs;
    for (std::size_t i = 0, k = rng() % 60; i < k; ++i) logs.push_back({rng() % m, rng() % n, static_cast<int>(rng() % 2)});
    const auto g = build_graph(logs, m, n);

    std::set<std::tuple<std::size_t, std::size_t, int>> distinct;
    for (const auto& l : logs) distinct.emplace(l.student, l.exercise, l.score);
    CHECK(g.edge_count() == distinct.size());

    for (int type = 0; type < 2; ++type) {
      std::map<std::size_t, std::size_t> sdeg, pdeg;
      for (const auto& [s, p, t] : distinct) {
        if (t != type) continue;
        ++sdeg[s];
        ++pdeg[p];
      }
      std::size_t s_total = 0, p_total = 0;
      for (std::size_t s = 0; s < m; ++s) {
        CHECK(degree(g, NodeSide::student, s, type) == sdeg[s]);
        s_total += degree(g, NodeSide::student, s, type);
        const auto nb = g.student_neighbors(type).segment(s);
        CHECK(std::is_sorted(nb.begin(), nb.end()));
        for (std::size_t p : nb) {
          const auto back = g.exercise_neighbors(type).segment(p);
          CHECK(std::binary_search(back.begin(), back.end(), s));
        }
      }
      for (std::size_t p = 0; p < n; ++p) {
        CHECK(degree(g, NodeSide::exercise, p, type) == pdeg[p]);
        p_total += degree(g, NodeSide::exercise, p, type);
      }
      CHECK(s_total == p_total);
    }
  }
}

TEST_CASE("construction is order-independent") {
  std::mt19937_64 rng(5);
  std::vector<InteractionLog> logs;
  for (int i = 0; i < 200; ++i) logs.push_back({rng() % 20, rng() % 30, static_cast<int>(rng() % 2)});
  const auto g = build_graph(logs, 20, 30);
  Rng shuffle_rng(9);
  for (int k = 0; k < 5; ++k) {
    portable_shuffle(std::span<InteractionLog>(logs), shuffle_rng);
    CHECK(build_graph(logs, 20, 30) == g);
  }
}

TEST_CASE("edge list dump") {
  const std::vector<InteractionLog> logs{{1, 0, 1}, {0, 1, 0}, {0, 0, 1}};
  std::ostringstream out;
  write_edge_list_csv(build_graph(logs, 2, 2), out);
  CHECK(out.str() == "s,p,type\n0,1,0\n0,0,1\n1,0,1\n");
}
