#include "congestion/equilibrium.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace congestion {

std::vector<UserClass> homogeneous_classes(const RoutingProblem& problem) {
  std::vector<UserClass> out;
  for (std::size_t i = 0; i < problem.num_od(); ++i) out.push_back({i, 1.0, problem.od_pairs()[i].rate});
  return out;
}

std::vector<UserClass> classes_from_profile(const RoutingProblem& problem, const SensitivityProfile& profile) {
  if (profile.num_od() != problem.num_od()) {
    throw std::invalid_argument("sensitivity profile has " + std::to_string(profile.num_od()) +
                                " OD entries, problem has " + std::to_string(problem.num_od()));
  }
  std::vector<UserClass> out;
  for (std::size_t i = 0; i < problem.num_od(); ++i) {
    for (const auto& c : profile.per_od()[i]) out.push_back({i, c.s, c.fraction * problem.od_pairs()[i].rate});
  }
  return out;
}

namespace {

struct EdgeModel {
  Polynomial lat, dlat, tau, dtau;
};

class Solver {
 public:
  Solver(const RoutingProblem& problem, const std::vector<Polynomial>& incentives, const std::vector<UserClass>& classes)
      : problem_(problem), classes_(classes) {
    if (incentives.size() != problem.num_edges()) {
      throw std::invalid_argument("expected one incentive per edge (" + std::to_string(problem.num_edges()) + ")");
    }
    for (std::size_t e = 0; e < problem.num_edges(); ++e) {
      const Polynomial& l = problem.edges()[e].latency.poly();
      edges_.push_back({l, l.derivative(), incentives[e], incentives[e].derivative()});
    }
    for (const auto& c : classes_) {
      if (c.od >= problem.num_od()) throw std::invalid_argument("user class references unknown OD pair");
      if (!(c.mass >= 0.0)) throw std::invalid_argument("user class mass must be nonnegative");
    }
  }

  bool has_decreasing_cost() const {
    const double upper = std::max(problem_.total_demand(), 0.0);
    constexpr int kGrid = 201;
    for (const auto& c : classes_) {
      if (c.mass <= 0.0) continue;
      std::vector<bool> seen(edges_.size(), false);
      for (const auto& path : problem_.paths().per_od[c.od]) {
        for (std::size_t e : path) {
          if (seen[e]) continue;
          seen[e] = true;
          for (int i = 0; i < kGrid; ++i) {
            const double f = upper * i / (kGrid - 1);
            if (derivative(e, c.s, f) < -1e-12) return true;
          }
        }
      }
    }
    return false;
  }

  void init(std::size_t restart, std::uint64_t seed) {
    x_.assign(classes_.size(), {});
    std::mt19937_64 rng;
    if (restart > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(restart)};
      rng.seed(seq);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const std::size_t np = problem_.paths().per_od[classes_[c].od].size();
      std::vector<double> w(np, 1.0);
      if (restart > 0) {
        for (double& v : w) v = -std::log1p(-unif(rng));
      }
      const double sum = std::accumulate(w.begin(), w.end(), 0.0);
      x_[c].resize(np);
      for (std::size_t p = 0; p < np; ++p) x_[c][p] = classes_[c].mass * w[p] / sum;
    }
    refresh_edge_flows();
  }

  void refresh_edge_flows() {
    f_.assign(edges_.size(), 0.0);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const auto& paths = problem_.paths().per_od[classes_[c].od];
      for (std::size_t p = 0; p < paths.size(); ++p) {
        for (std::size_t e : paths[p]) f_[e] += x_[c][p];
      }
    }
    for (double& v : f_) v = std::max(v, 0.0);
  }

  double edge_cost(std::size_t e, double s, double f) const { return edges_[e].lat(f) + s * edges_[e].tau(f); }
  double derivative(std::size_t e, double s, double f) const { return edges_[e].dlat(f) + s * edges_[e].dtau(f); }

  double path_cost(std::size_t c, std::size_t p) const {
    double cost = 0.0;
    for (std::size_t e : problem_.paths().per_od[classes_[c].od][p]) cost += edge_cost(e, classes_[c].s, f_[e]);
    return cost;
  }

  double residual() const {
    double worst = 0.0;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const std::size_t np = x_[c].size();
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < np; ++p) {
        const double cost = path_cost(c, p);
        lo = std::min(lo, cost);
        if (x_[c][p] > 0.0) hi = std::max(hi, cost);
      }
      if (hi > lo) worst = std::max(worst, hi - lo);
    }
    return worst;
  }

  void newton_sweep(double omega) {
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      if (classes_[c].mass <= 0.0) continue;
      const auto& paths = problem_.paths().per_od[classes_[c].od];
      const double s = classes_[c].s;
      const std::size_t np = paths.size();
      if (np < 2) continue;
      std::vector<double> cost(np);
      for (std::size_t p = 0; p < np; ++p) cost[p] = path_cost(c, p);
      for (std::size_t q = 0; q < np; ++q) {
        if (x_[c][q] <= 0.0) continue;
        const std::size_t best = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
        if (best == q) continue;
        const double gap = cost[q] - cost[best];
        if (gap <= 0.0) continue;
        double d = 0.0;
        for (std::size_t e : paths[q]) {
          if (std::find(paths[best].begin(), paths[best].end(), e) == paths[best].end()) d += derivative(e, s, f_[e]);
        }
        for (std::size_t e : paths[best]) {
          if (std::find(paths[q].begin(), paths[q].end(), e) == paths[q].end()) d += derivative(e, s, f_[e]);
        }
        double delta = x_[c][q];
        if (d > 0.0 && gap / d < x_[c][q]) delta = omega * gap / d;
        x_[c][q] = delta == x_[c][q] ? 0.0 : x_[c][q] - delta;
        x_[c][best] += delta;
        for (std::size_t e : paths[q]) f_[e] -= delta;
        for (std::size_t e : paths[best]) f_[e] += delta;
        for (std::size_t e : paths[q]) f_[e] = std::max(f_[e], 0.0);
        for (std::size_t p = 0; p < np; ++p) cost[p] = path_cost(c, p);
      }
    }
    refresh_edge_flows();
  }

  void averaging_step(std::size_t t) {
    const double alpha = 1.0 / static_cast<double>(t + 2);
    std::vector<std::size_t> target(classes_.size(), 0);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < x_[c].size(); ++p) {
        const double cost = path_cost(c, p);
        if (cost < best) {
          best = cost;
          target[c] = p;
        }
      }
    }
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      for (std::size_t p = 0; p < x_[c].size(); ++p) {
        const double y = p == target[c] ? classes_[c].mass : 0.0;
        x_[c][p] += alpha * (y - x_[c][p]);
      }
    }
    refresh_edge_flows();
  }

  const std::vector<std::vector<double>>& path_flows() const { return x_; }
  void set_path_flows(std::vector<std::vector<double>> x) {
    x_ = std::move(x);
    refresh_edge_flows();
  }

  EquilibriumResult result() const {
    EquilibriumResult r;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      r.flow.classes.push_back(ClassFlow{classes_[c].od, classes_[c].s, classes_[c].mass, x_[c]});
    }
    r.edge_flows = f_;
    const auto lat = problem_.latencies();
    r.total_latency = total_latency(lat, f_);
    return r;
  }

 private:
  const RoutingProblem& problem_;
  std::vector<UserClass> classes_;
  std::vector<EdgeModel> edges_;
  std::vector<std::vector<double>> x_;
  std::vector<double> f_;
};

EquilibriumResult first_converged(const RoutingProblem& problem, const std::vector<Polynomial>& incentives,
                                  const std::vector<UserClass>& classes, const SolverConfig& config) {
  const std::size_t runs = std::max<std::size_t>(config.restarts, 1);
  EquilibriumResult best;
  bool have = false;
  for (std::size_t r = 0; r < runs; ++r) {
    EquilibriumResult res = solve_equilibrium(problem, incentives, classes, config, r);
    if (res.converged) return res;
    if (!have || res.residual < best.residual) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

}  // namespace

EquilibriumResult solve_equilibrium(const RoutingProblem& problem, const std::vector<Polynomial>& incentives,
                                    const std::vector<UserClass>& classes, const SolverConfig& config,
                                    std::size_t restart) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("solver epsilon must be positive");
  Solver solver(problem, incentives, classes);
  solver.init(restart, config.seed);

  const bool decreasing = solver.has_decreasing_cost();
  const bool averaging = decreasing || config.step == StepRule::kHarmonic;

  double residual = solver.residual();
  double best = residual;
  double omega = 1.0;
  std::size_t stalled = 0;
  std::size_t it = 0;
  while (residual > config.epsilon && it < config.max_iterations) {
    if (averaging) {
      solver.averaging_step(it);
    } else {
      solver.newton_sweep(omega);
    }
    ++it;
    residual = solver.residual();
    if (residual < 0.999 * best) {
      best = residual;
      stalled = 0;
    } else if (++stalled >= 25) {
      omega = std::max(omega * 0.5, 1.0 / 1024.0);
      stalled = 0;
    }
  }
  // Polish converged Newton solutions well below epsilon so that rescaled
  // costs (nominally equivalent mechanisms) still verify at epsilon.
  if (!averaging && residual <= config.epsilon) {
    for (int k = 0; k < 16 && residual > 1e-6 * config.epsilon && it < config.max_iterations; ++k) {
      auto saved = solver.path_flows();
      solver.newton_sweep(omega);
      ++it;
      const double next = solver.residual();
      if (!(next < residual)) {
        solver.set_path_flows(std::move(saved));
        break;
      }
      residual = next;
    }
  }

  EquilibriumResult r = solver.result();
  r.residual = residual;
  r.iterations = it;
  r.converged = residual <= config.epsilon;
  r.decreasing_cost = decreasing;
  r.restart = restart;
  return r;
}

EquilibriumResult social_optimum(const RoutingProblem& problem, const SolverConfig& config) {
  const auto tau = IncentiveMechanism::marginal_cost().incentive_polys(problem);
  const auto classes = homogeneous_classes(problem);
  const std::size_t runs = std::max<std::size_t>(config.restarts, 1);
  std::vector<EquilibriumResult> results(runs);
  parallel_for(runs, config.jobs, [&](std::size_t r) { results[r] = solve_equilibrium(problem, tau, classes, config, r); });

  const EquilibriumResult* best = nullptr;
  for (const auto& res : results) {
    if (res.converged && (!best || res.total_latency < best->total_latency)) best = &res;
  }
  if (!best) {
    throw ConvergenceError("social optimum did not converge within " + std::to_string(config.max_iterations) +
                           " iterations");
  }
  return *best;
}

EquilibriumResult nash_flow_homogeneous(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                                        const SolverConfig& config) {
  return first_converged(problem, mechanism.incentive_polys(problem), homogeneous_classes(problem), config);
}

EquilibriumResult nash_flow_heterogeneous(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                                          const SensitivityProfile& profile, const SolverConfig& config) {
  return first_converged(problem, mechanism.incentive_polys(problem), classes_from_profile(problem, profile), config);
}

EquilibriumCheck verify_equilibrium(const RoutingProblem& problem, const std::vector<Polynomial>& incentives,
                                    const FlowAssignment& flow, double epsilon) {
  if (incentives.size() != problem.num_edges()) throw std::invalid_argument("expected one incentive per edge");
  const auto fe = edge_flows(problem, flow);
  std::vector<double> lat(problem.num_edges()), tau(problem.num_edges());
  for (std::size_t e = 0; e < problem.num_edges(); ++e) {
    lat[e] = problem.edges()[e].latency.eval(std::max(fe[e], 0.0));
    tau[e] = incentives[e](std::max(fe[e], 0.0));
  }

  EquilibriumCheck check;
  for (std::size_t c = 0; c < flow.classes.size(); ++c) {
    const auto& cls = flow.classes[c];
    const auto& paths = problem.paths().per_od[cls.od];
    std::vector<double> cost(paths.size(), 0.0);
    for (std::size_t p = 0; p < paths.size(); ++p) {
      for (std::size_t e : paths[p]) cost[p] += lat[e] + cls.sensitivity * tau[e];
    }
    const std::size_t best = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    for (std::size_t p = 0; p < paths.size(); ++p) {
      if (!(cls.path_flows[p] > 0.0)) continue;
      const double gap = cost[p] - cost[best];
      if (gap > check.gap) {
        check.gap = gap;
        check.class_index = c;
        check.od = cls.od;
        check.used_path = p;
        check.better_path = best;
      }
    }
  }
  check.ok = !(check.gap > epsilon);
  return check;
}

EquilibriumCheck verify_equilibrium(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                                    const FlowAssignment& flow, double epsilon) {
  return verify_equilibrium(problem, mechanism.incentive_polys(problem), flow, epsilon);
}

FlowAssignment with_sensitivities(FlowAssignment flow, const std::vector<double>& s) {
  if (s.size() != flow.classes.size()) throw std::invalid_argument("one sensitivity per flow class expected");
  for (std::size_t c = 0; c < s.size(); ++c) flow.classes[c].sensitivity = s[c];
  return flow;
}

namespace {

WorstNash search(const RoutingProblem& problem, const std::vector<Polynomial>& tau,
                 const std::vector<SensitivityProfile>& profiles, const SolverConfig& config) {
  const std::size_t runs = std::max<std::size_t>(config.restarts, 1);
  const std::size_t tasks = profiles.size() * runs;
  std::vector<EquilibriumResult> results(tasks);
  parallel_for(tasks, config.jobs, [&](std::size_t k) {
    const auto classes = classes_from_profile(problem, profiles[k / runs]);
    results[k] = solve_equilibrium(problem, tau, classes, config, k % runs);
  });

  WorstNash out;
  out.solves = tasks;
  std::size_t pick = tasks;
  bool any_converged = false;
  for (std::size_t k = 0; k < tasks; ++k) {
    const auto& r = results[k];
    if (!r.converged) {
      out.approximate = true;
      continue;
    }
    if (!any_converged || r.total_latency > out.latency) {
      out.latency = r.total_latency;
      pick = k;
    }
    any_converged = true;
  }
  if (!any_converged) {
    for (std::size_t k = 0; k < tasks; ++k) {
      if (pick == tasks || results[k].total_latency > out.latency) {
        out.latency = results[k].total_latency;
        pick = k;
      }
    }
  }
  if (pick < tasks) {
    out.worst = std::move(results[pick]);
    out.profile = profiles[pick / runs];
  }
  return out;
}

}  // namespace

WorstNash worst_nash_latency(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                             const SensitivityProfile& profile, const SolverConfig& config) {
  return search(problem, mechanism.incentive_polys(problem), {profile}, config);
}

WorstNash worst_nash_latency(const RoutingProblem& problem, const IncentiveMechanism& mechanism, double s_low,
                             double s_high, const SolverConfig& config) {
  if (!(s_low > 0.0) || !(s_high >= s_low)) {
    throw std::invalid_argument("sensitivity bounds must satisfy 0 < s_low <= s_high");
  }
  const auto tau = mechanism.incentive_polys(problem);
  const std::size_t num_od = problem.num_od();
  std::vector<SensitivityProfile> profiles;
  if (s_low == s_high || num_od == 0) {
    profiles.push_back(SensitivityProfile::homogeneous(num_od, s_low));
  } else {
    const std::size_t g = std::max<std::size_t>(config.profile_grid, 2);
    const auto split = [&](std::size_t i) { return static_cast<double>(i) / static_cast<double>(g - 1); };
    if (num_od <= 2) {
      std::size_t total = 1;
      for (std::size_t i = 0; i < num_od; ++i) total *= g;
      for (std::size_t k = 0; k < total; ++k) {
        std::vector<double> w(num_od);
        std::size_t rem = k;
        for (std::size_t i = 0; i < num_od; ++i) {
          w[i] = split(rem % g);
          rem /= g;
        }
        profiles.push_back(SensitivityProfile::two_point(s_low, s_high, w));
      }
    } else {
      for (std::size_t i = 0; i < g; ++i) {
        profiles.push_back(SensitivityProfile::two_point(s_low, s_high, std::vector<double>(num_od, split(i))));
      }
    }
  }
  return search(problem, tau, profiles, config);
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace congestion
