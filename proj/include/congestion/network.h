#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "congestion/latency.h"

namespace congestion {

inline constexpr std::size_t kDefaultPathCap = 10000;

struct Edge {
  std::string id;
  std::size_t tail = 0;
  std::size_t head = 0;
  LatencyFunction latency = LatencyFunction::constant(0.0);
};

struct OdPair {
  std::size_t origin = 0;
  std::size_t dest = 0;
  double rate = 0.0;
};

// Unvalidated problem description, usually parsed from a .cg.json file.
struct ProblemSpec {
  struct EdgeSpec {
    std::string id;
    std::string tail;
    std::string head;
    LatencyFunction latency = LatencyFunction::constant(0.0);
  };
  struct OdSpec {
    std::string origin;
    std::string dest;
    double rate = 0.0;
  };

  std::string name;
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
  std::vector<OdSpec> od;
};

// A path is a sequence of edge indices into RoutingProblem::edges().
using Path = std::vector<std::size_t>;

struct PathSet {
  std::vector<std::vector<Path>> per_od;

  std::size_t total() const;
};

class RoutingProblem {
 public:
  const std::string& name() const { return name_; }
  const std::vector<std::string>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<OdPair>& od_pairs() const { return od_; }
  const PathSet& paths() const { return paths_; }

  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_od() const { return od_.size(); }
  double total_demand() const;
  std::vector<LatencyFunction> latencies() const;

  // Single OD pair and every edge runs origin -> destination, so each path is one edge.
  bool is_parallel() const { return parallel_; }
  bool all_affine() const;

  std::size_t edge_index(const std::string& id) const;

 private:
  friend RoutingProblem build_problem(const ProblemSpec& spec, std::size_t path_cap);

  std::string name_;
  std::vector<std::string> vertices_;
  std::vector<Edge> edges_;
  std::vector<OdPair> od_;
  PathSet paths_;
  bool parallel_ = false;
};

// Validates the description and enumerates simple paths. Throws
// std::invalid_argument on dangling references, nonpositive rates,
// unreachable destinations or when the path cap is exceeded.
RoutingProblem build_problem(const ProblemSpec& spec, std::size_t path_cap = kDefaultPathCap);

// All simple paths per OD pair, ordered lexicographically by edge id.
PathSet enumerate_paths(const RoutingProblem& problem, std::size_t path_cap = kDefaultPathCap);

// Orders edge ids so that embedded digit runs compare numerically ("e2" < "e10").
bool natural_less(const std::string& a, const std::string& b);

struct ClassFlow {
  std::size_t od = 0;
  double sensitivity = 1.0;
  double mass = 0.0;
  std::vector<double> path_flows;
};

// Path flows for each (OD pair, sensitivity class).
struct FlowAssignment {
  std::vector<ClassFlow> classes;
};

// One class per OD pair with unit sensitivity, flows given per path.
FlowAssignment homogeneous_flow(const RoutingProblem& problem, std::vector<std::vector<double>> path_flows);

// f_e = sum of flows on paths through e. Throws on dimension mismatch.
std::vector<double> edge_flows(const FlowAssignment& flow, const PathSet& paths, std::size_t num_edges);
std::vector<double> edge_flows(const RoutingProblem& problem, const FlowAssignment& flow);

// Throws std::invalid_argument naming the first violated feasibility condition.
void check_feasible(const RoutingProblem& problem, const FlowAssignment& flow, double rel_tol = 1e-9);

// Total latency of a feasible flow.
double total_latency(const RoutingProblem& problem, const FlowAssignment& flow);

std::map<std::string, double> edge_flow_map(const RoutingProblem& problem, std::span<const double> flows);

}  // namespace congestion
