#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "congestion/network.h"
#include "congestion/poa.h"

using namespace congestion;

namespace {

ProblemSpec fig1_spec() {
  ProblemSpec s;
  s.name = "fig1";
  s.vertices = {"v1", "v2", "v3", "v4"};
  s.edges = {{"e1", "v1", "v4", LatencyFunction::polynomial({0, 0, 4})},
             {"e2", "v1", "v3", LatencyFunction::constant(0.5)},
             {"e3", "v2", "v3", LatencyFunction::constant(0.5)},
             {"e4", "v2", "v4", LatencyFunction::affine(2, 0)},
             {"e5", "v3", "v4", LatencyFunction::constant(0.5)}};
  s.od = {{"v1", "v4", 0.5}, {"v2", "v4", 0.5}};
  return s;
}

std::vector<std::vector<std::string>> path_ids(const RoutingProblem& p, std::size_t od) {
  std::vector<std::vector<std::string>> out;
  for (const auto& path : p.paths().per_od[od]) {
    std::vector<std::string> ids;
    for (std::size_t e : path) ids.push_back(p.edges()[e].id);
    out.push_back(ids);
  }
  return out;
}

// Independent DFS over simple paths, ids sorted lexicographically.
void dfs(const ProblemSpec& s, const std::string& at, const std::string& dest, std::vector<std::string>& seen,
         std::vector<std::string>& path, std::vector<std::vector<std::string>>& out) {
  if (at == dest) {
    out.push_back(path);
    return;
  }
  for (const auto& e : s.edges) {
    if (e.tail != at || std::find(seen.begin(), seen.end(), e.head) != seen.end()) continue;
    seen.push_back(e.head);
    path.push_back(e.id);
    dfs(s, e.head, dest, seen, path, out);
    path.pop_back();
    seen.pop_back();
  }
}

std::vector<std::vector<std::string>> oracle_paths(const ProblemSpec& s, std::size_t od) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> seen = {s.od[od].origin}, path;
  dfs(s, s.od[od].origin, s.od[od].dest, seen, path, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(BuildProblem, FigureNetwork) {
  const RoutingProblem p = build_problem(fig1_spec());
  EXPECT_EQ(p.num_edges(), 5u);
  EXPECT_EQ(p.num_od(), 2u);
  EXPECT_DOUBLE_EQ(p.total_demand(), 1.0);
  EXPECT_FALSE(p.is_parallel());
}

TEST(BuildProblem, RateMustBePositive) {
  auto s = fig1_spec();
  s.od[0].rate = 0.0;
  try {
    build_problem(s);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("rate must be positive"), std::string::npos);
  }
  s.od[0].rate = -1.0;
  EXPECT_THROW(build_problem(s), std::invalid_argument);
}

TEST(BuildProblem, UnreachableDestination) {
  auto s = fig1_spec();
  s.od[0] = {"v4", "v1", 1.0};
  EXPECT_THROW(build_problem(s), std::invalid_argument);
}

TEST(BuildProblem, DanglingVertex) {
  auto s = fig1_spec();
  s.edges[2].tail = "v9";
  try {
    build_problem(s);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("v9"), std::string::npos);
  }
}

TEST(BuildProblem, DuplicateEdgeId) {
  auto s = fig1_spec();
  s.edges[1].id = "e1";
  EXPECT_THROW(build_problem(s), std::invalid_argument);
}

TEST(EnumeratePaths, FigureOdOne) {
  const RoutingProblem p = build_problem(fig1_spec());
  const auto ids = path_ids(p, 0);
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], (std::vector<std::string>{"e1"}));
  EXPECT_EQ(ids[1], (std::vector<std::string>{"e2", "e5"}));
  EXPECT_EQ(path_ids(p, 1), oracle_paths(fig1_spec(), 1));
}

TEST(EnumeratePaths, PigouHasTwoSingleEdgePaths) {
  const RoutingProblem p = pigou_instance(2);
  ASSERT_EQ(p.paths().per_od[0].size(), 2u);
  for (const auto& path : p.paths().per_od[0]) EXPECT_EQ(path.size(), 1u);
  EXPECT_TRUE(p.is_parallel());
}

TEST(EnumeratePaths, SingleEdge) {
  ProblemSpec s;
  s.vertices = {"o", "d"};
  s.edges = {{"e", "o", "d", LatencyFunction::affine(1, 0)}};
  s.od = {{"o", "d", 1.0}};
  EXPECT_EQ(build_problem(s).paths().total(), 1u);
}

TEST(EnumeratePaths, CapIsEnforced) {
  // Layered graph with 2^6 = 64 paths.
  ProblemSpec s;
  for (int i = 0; i <= 6; ++i) s.vertices.push_back("v" + std::to_string(i));
  for (int i = 0; i < 6; ++i) {
    for (int k = 0; k < 2; ++k) {
      s.edges.push_back({"e" + std::to_string(i) + "_" + std::to_string(k), "v" + std::to_string(i),
                         "v" + std::to_string(i + 1), LatencyFunction::affine(1, 0)});
    }
  }
  s.od = {{"v0", "v6", 1.0}};
  EXPECT_EQ(build_problem(s).paths().total(), 64u);
  try {
    build_problem(s, 10);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}

TEST(EnumeratePaths, OrderInvariantUnderEdgeShuffle) {
  const auto base = build_problem(fig1_spec());
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = fig1_spec();
    std::shuffle(s.edges.begin(), s.edges.end(), rng);
    const auto p = build_problem(s);
    for (std::size_t od = 0; od < 2; ++od) EXPECT_EQ(path_ids(p, od), path_ids(base, od));
  }
}

TEST(EnumeratePaths, MatchesIndependentDfs) {
  ProblemSpec s;
  s.vertices = {"a", "b", "c", "d", "e"};
  const char* arcs[][2] = {{"a", "b"}, {"a", "c"}, {"b", "c"}, {"c", "b"}, {"b", "d"},
                           {"c", "d"}, {"c", "e"}, {"e", "d"}, {"d", "a"}};
  int k = 0;
  for (auto& a : arcs) s.edges.push_back({"x" + std::to_string(k++), a[0], a[1], LatencyFunction::affine(1, 0)});
  s.od = {{"a", "d", 1.0}};
  const auto p = build_problem(s);
  auto got = path_ids(p, 0);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, oracle_paths(s, 0));
}

TEST(NaturalOrder, DigitRuns) {
  EXPECT_TRUE(natural_less("e2", "e10"));
  EXPECT_FALSE(natural_less("e10", "e2"));
  EXPECT_TRUE(natural_less("a", "b"));
}

TEST(EdgeFlows, PaperNashVector) {
  const RoutingProblem p = build_problem(fig1_spec());
  // OD1 on {e1}, OD2 on {e4}.
  std::vector<std::vector<double>> pf(2);
  for (std::size_t od = 0; od < 2; ++od) {
    const auto ids = path_ids(p, od);
    pf[od].assign(ids.size(), 0.0);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] == std::vector<std::string>{od == 0 ? "e1" : "e4"}) pf[od][k] = 0.5;
    }
  }
  const auto f = edge_flows(p, homogeneous_flow(p, pf));
  const std::vector<double> expected = {0.5, 0, 0, 0.5, 0};
  for (std::size_t e = 0; e < 5; ++e) EXPECT_DOUBLE_EQ(f[e], expected[e]);
}

TEST(EdgeFlows, ZeroAndSplit) {
  const RoutingProblem p = build_problem(fig1_spec());
  const std::size_t n1 = p.paths().per_od[1].size();
  auto zero = edge_flows(p, homogeneous_flow(p, {{0, 0}, std::vector<double>(n1, 0.0)}));
  for (double x : zero) EXPECT_EQ(x, 0.0);
  auto split = edge_flows(p, homogeneous_flow(p, {{0.25, 0.25}, std::vector<double>(n1, 0.0)}));
  EXPECT_DOUBLE_EQ(split[p.edge_index("e1")], 0.25);
  EXPECT_DOUBLE_EQ(split[p.edge_index("e2")], 0.25);
  EXPECT_DOUBLE_EQ(split[p.edge_index("e5")], 0.25);
}

TEST(EdgeFlows, DimensionMismatch) {
  const RoutingProblem p = build_problem(fig1_spec());
  FlowAssignment f;
  f.classes.push_back({0, 1.0, 0.5, {0.5}});
  EXPECT_THROW(edge_flows(p, f), std::invalid_argument);
}

TEST(EdgeFlows, DeterministicAndConsistent) {
  const RoutingProblem p = build_problem(fig1_spec());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    FlowAssignment f;
    for (std::size_t od = 0; od < 2; ++od) {
      std::vector<double> w(p.paths().per_od[od].size());
      double s = 0;
      for (double& x : w) s += (x = u(rng));
      for (double& x : w) x *= 0.5 / s;
      f.classes.push_back({od, 1.0, 0.5, w});
    }
    const auto a = edge_flows(p, f);
    const auto b = edge_flows(p, f);
    EXPECT_EQ(a, b);
    EXPECT_NO_THROW(check_feasible(p, f));
    // Oracle: sum path flows edge by edge.
    std::vector<double> o(5, 0.0);
    for (const auto& c : f.classes)
      for (std::size_t k = 0; k < c.path_flows.size(); ++k)
        for (std::size_t e : p.paths().per_od[c.od][k]) o[e] += c.path_flows[k];
    for (std::size_t e = 0; e < 5; ++e) {
      EXPECT_NEAR(a[e], o[e], 1e-15);
      EXPECT_GE(a[e], 0.0);
    }
  }
}

TEST(CheckFeasible, RejectsWrongMass) {
  const RoutingProblem p = build_problem(fig1_spec());
  const std::size_t n1 = p.paths().per_od[1].size();
  std::vector<double> od2(n1, 0.0);
  od2[0] = 0.5;
  EXPECT_THROW(check_feasible(p, homogeneous_flow(p, {{0.3, 0.1}, od2})), std::invalid_argument);
  EXPECT_THROW(check_feasible(p, homogeneous_flow(p, {{0.6, -0.1}, od2})), std::invalid_argument);
  EXPECT_NO_THROW(check_feasible(p, homogeneous_flow(p, {{0.25, 0.25}, od2})));
}
