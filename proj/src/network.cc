#include "congestion/network.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace congestion {

std::size_t PathSet::total() const {
  std::size_t n = 0;
  for (const auto& od : per_od) n += od.size();
  return n;
}

double RoutingProblem::total_demand() const {
  double r = 0.0;
  for (const auto& od : od_) r += od.rate;
  return r;
}

std::vector<LatencyFunction> RoutingProblem::latencies() const {
  std::vector<LatencyFunction> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back(e.latency);
  return out;
}

bool RoutingProblem::all_affine() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.latency.is_affine(); });
}

std::size_t RoutingProblem::edge_index(const std::string& id) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].id == id) return e;
  }
  throw std::invalid_argument("unknown edge id '" + id + "'");
}

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      // Strip leading zeros, then longer digit runs are larger.
      std::size_t is = i, js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const std::string_view ra(a.data() + is, ie - is);
      const std::string_view rb(b.data() + js, je - js);
      if (ra.size() != rb.size()) return ra.size() < rb.size();
      if (ra != rb) return ra < rb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

namespace {

void dfs_paths(const RoutingProblem& problem, const std::vector<std::vector<std::size_t>>& out_edges,
               std::size_t v, std::size_t dest, std::vector<bool>& visited, Path& current,
               std::vector<Path>& found, std::size_t& count, std::size_t cap) {
  if (v == dest) {
    if (++count > cap) {
      throw std::invalid_argument("path enumeration exceeded the cap of " + std::to_string(cap) + " paths");
    }
    found.push_back(current);
    return;
  }
  for (std::size_t e : out_edges[v]) {
    const std::size_t w = problem.edges()[e].head;
    if (visited[w]) continue;
    visited[w] = true;
    current.push_back(e);
    dfs_paths(problem, out_edges, w, dest, visited, current, found, count, cap);
    current.pop_back();
    visited[w] = false;
  }
}

}  // namespace

PathSet enumerate_paths(const RoutingProblem& problem, std::size_t path_cap) {
  std::vector<std::vector<std::size_t>> out_edges(problem.vertices().size());
  for (std::size_t e = 0; e < problem.num_edges(); ++e) out_edges[problem.edges()[e].tail].push_back(e);

  const auto id_less = [&](std::size_t x, std::size_t y) {
    return natural_less(problem.edges()[x].id, problem.edges()[y].id);
  };
  const auto path_less = [&](const Path& p, const Path& q) {
    return std::lexicographical_compare(p.begin(), p.end(), q.begin(), q.end(), id_less);
  };

  PathSet set;
  std::size_t count = 0;
  for (const auto& od : problem.od_pairs()) {
    std::vector<bool> visited(problem.vertices().size(), false);
    visited[od.origin] = true;
    Path current;
    std::vector<Path> found;
    dfs_paths(problem, out_edges, od.origin, od.dest, visited, current, found, count, path_cap);
    std::sort(found.begin(), found.end(), path_less);
    set.per_od.push_back(std::move(found));
  }
  return set;
}

RoutingProblem build_problem(const ProblemSpec& spec, std::size_t path_cap) {
  RoutingProblem p;
  p.name_ = spec.name;

  std::unordered_map<std::string, std::size_t> vertex_index;
  for (const auto& v : spec.vertices) {
    if (!vertex_index.emplace(v, p.vertices_.size()).second) {
      throw std::invalid_argument("duplicate vertex '" + v + "'");
    }
    p.vertices_.push_back(v);
  }
  const auto lookup = [&](const std::string& v, const std::string& what) {
    auto it = vertex_index.find(v);
    if (it == vertex_index.end()) throw std::invalid_argument(what + " references unknown vertex '" + v + "'");
    return it->second;
  };

  std::unordered_map<std::string, bool> seen_edge;
  for (const auto& e : spec.edges) {
    if (!seen_edge.emplace(e.id, true).second) throw std::invalid_argument("duplicate edge id '" + e.id + "'");
    Edge edge;
    edge.id = e.id;
    edge.tail = lookup(e.tail, "edge '" + e.id + "' tail");
    edge.head = lookup(e.head, "edge '" + e.id + "' head");
    if (edge.tail == edge.head) throw std::invalid_argument("edge '" + e.id + "' is a self-loop");
    edge.latency = e.latency;
    p.edges_.push_back(std::move(edge));
  }

  for (const auto& od : spec.od) {
    OdPair pair;
    pair.origin = lookup(od.origin, "OD pair origin");
    pair.dest = lookup(od.dest, "OD pair destination");
    if (pair.origin == pair.dest) throw std::invalid_argument("OD pair origin equals destination");
    if (!(od.rate > 0.0) || !std::isfinite(od.rate)) {
      throw std::invalid_argument("rate must be positive (OD " + od.origin + " -> " + od.dest + ")");
    }
    pair.rate = od.rate;
    p.od_.push_back(pair);
  }

  p.paths_ = enumerate_paths(p, path_cap);
  for (std::size_t i = 0; i < p.od_.size(); ++i) {
    if (p.paths_.per_od[i].empty()) {
      throw std::invalid_argument("destination " + spec.od[i].dest + " is unreachable from origin " +
                                  spec.od[i].origin);
    }
  }

  p.parallel_ = p.od_.size() == 1 && !p.edges_.empty() &&
                std::all_of(p.edges_.begin(), p.edges_.end(), [&](const Edge& e) {
                  return e.tail == p.od_[0].origin && e.head == p.od_[0].dest;
                });
  return p;
}

FlowAssignment homogeneous_flow(const RoutingProblem& problem, std::vector<std::vector<double>> path_flows) {
  if (path_flows.size() != problem.num_od()) throw std::invalid_argument("one path-flow vector per OD pair expected");
  FlowAssignment flow;
  for (std::size_t i = 0; i < problem.num_od(); ++i) {
    flow.classes.push_back(ClassFlow{i, 1.0, problem.od_pairs()[i].rate, std::move(path_flows[i])});
  }
  return flow;
}

std::vector<double> edge_flows(const FlowAssignment& flow, const PathSet& paths, std::size_t num_edges) {
  std::vector<double> fe(num_edges, 0.0);
  for (const auto& cls : flow.classes) {
    if (cls.od >= paths.per_od.size()) throw std::invalid_argument("flow class references unknown OD pair");
    const auto& od_paths = paths.per_od[cls.od];
    if (cls.path_flows.size() != od_paths.size()) {
      throw std::invalid_argument("flow class has " + std::to_string(cls.path_flows.size()) + " path flows, expected " +
                                  std::to_string(od_paths.size()));
    }
    for (std::size_t p = 0; p < od_paths.size(); ++p) {
      for (std::size_t e : od_paths[p]) {
        if (e >= num_edges) throw std::invalid_argument("path references unknown edge");
        fe[e] += cls.path_flows[p];
      }
    }
  }
  return fe;
}

std::vector<double> edge_flows(const RoutingProblem& problem, const FlowAssignment& flow) {
  return edge_flows(flow, problem.paths(), problem.num_edges());
}

void check_feasible(const RoutingProblem& problem, const FlowAssignment& flow, double rel_tol) {
  std::vector<double> od_mass(problem.num_od(), 0.0);
  for (const auto& cls : flow.classes) {
    if (cls.od >= problem.num_od()) throw std::invalid_argument("flow class references unknown OD pair");
    if (cls.path_flows.size() != problem.paths().per_od[cls.od].size()) {
      throw std::invalid_argument("flow class path count does not match the path set");
    }
    for (double x : cls.path_flows) {
      if (!(x >= 0.0)) throw std::invalid_argument("path flows must be nonnegative");
    }
    od_mass[cls.od] += std::accumulate(cls.path_flows.begin(), cls.path_flows.end(), 0.0);
  }
  for (std::size_t i = 0; i < problem.num_od(); ++i) {
    const double r = problem.od_pairs()[i].rate;
    if (std::abs(od_mass[i] - r) > rel_tol * std::max(1.0, r)) {
      throw std::invalid_argument("infeasible flow: OD " + std::to_string(i) + " carries " +
                                  std::to_string(od_mass[i]) + " instead of rate " + std::to_string(r));
    }
  }
}

double total_latency(const RoutingProblem& problem, const FlowAssignment& flow) {
  check_feasible(problem, flow);
  const auto fe = edge_flows(problem, flow);
  const auto lat = problem.latencies();
  return total_latency(lat, fe);
}

std::map<std::string, double> edge_flow_map(const RoutingProblem& problem, std::span<const double> flows) {
  std::map<std::string, double> out;
  for (std::size_t e = 0; e < problem.num_edges() && e < flows.size(); ++e) out[problem.edges()[e].id] = flows[e];
  return out;
}

}  // namespace congestion
