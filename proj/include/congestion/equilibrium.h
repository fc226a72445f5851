#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "congestion/incentives.h"
#include "congestion/network.h"

namespace congestion {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StepRule {
  // Pairwise Newton shifts toward the cheapest path (path equilibration).
  kNewton,
  // Method of successive averages toward the all-or-nothing best response.
  kHarmonic,
};

struct SolverConfig {
  double epsilon = 1e-7;
  std::size_t max_iterations = 100000;
  StepRule step = StepRule::kNewton;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  // Points on the mass-split grid used by worst-case profile searches.
  std::size_t profile_grid = 51;
  // Worker threads for independent solves; 0 means hardware concurrency.
  std::size_t jobs = 1;
};

// One population of users: an OD pair, a price sensitivity and its mass.
struct UserClass {
  std::size_t od = 0;
  double s = 1.0;
  double mass = 0.0;
};

std::vector<UserClass> homogeneous_classes(const RoutingProblem& problem);
std::vector<UserClass> classes_from_profile(const RoutingProblem& problem, const SensitivityProfile& profile);

struct EquilibriumResult {
  FlowAssignment flow;
  std::vector<double> edge_flows;
  double total_latency = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Some class cost decreases on [0, demand]; the averaging rule was used.
  bool decreasing_cost = false;
  std::size_t restart = 0;
};

// Solves the multi-class equilibrium for fixed incentive polynomials (one per
// edge). Restart 0 starts from a uniform split, restart r > 0 from a random
// split drawn from (seed, r).
EquilibriumResult solve_equilibrium(const RoutingProblem& problem, const std::vector<Polynomial>& incentives,
                                    const std::vector<UserClass>& classes, const SolverConfig& config,
                                    std::size_t restart = 0);

// Minimizes total latency (Nash flow under marginal-cost tolls). Throws
// ConvergenceError if no restart converges.
EquilibriumResult social_optimum(const RoutingProblem& problem, const SolverConfig& config = {});

EquilibriumResult nash_flow_homogeneous(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                                        const SolverConfig& config = {});

// Returns the first converged restart, or the best residual with converged = false.
EquilibriumResult nash_flow_heterogeneous(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                                          const SensitivityProfile& profile, const SolverConfig& config = {});

struct EquilibriumCheck {
  bool ok = true;
  std::size_t class_index = 0;
  std::size_t od = 0;
  std::size_t used_path = 0;
  std::size_t better_path = 0;
  double gap = 0.0;
};

// Largest cost gap between a flow-carrying path and the cheapest alternative,
// over all classes. Sensitivities are taken from the flow's classes.
EquilibriumCheck verify_equilibrium(const RoutingProblem& problem, const std::vector<Polynomial>& incentives,
                                    const FlowAssignment& flow, double epsilon);
EquilibriumCheck verify_equilibrium(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                                    const FlowAssignment& flow, double epsilon);

// Same flow with class i relabelled to sensitivity s[i].
FlowAssignment with_sensitivities(FlowAssignment flow, const std::vector<double>& s);

struct WorstNash {
  double latency = 0.0;
  // Always true: the search only finds equilibria, it cannot certify the sup.
  bool lower_bound = true;
  // Some sub-solve did not converge.
  bool approximate = false;
  std::size_t solves = 0;
  EquilibriumResult worst;
  std::optional<SensitivityProfile> profile;
};

// Max total latency over restarts for one sensitivity profile.
WorstNash worst_nash_latency(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                             const SensitivityProfile& profile, const SolverConfig& config = {});

// Max total latency over restarts and extremal two-class profiles: each OD
// splits its mass between s_low and s_high on a grid. With at most two OD
// pairs the grid is a product over ODs, otherwise all ODs share the split.
WorstNash worst_nash_latency(const RoutingProblem& problem, const IncentiveMechanism& mechanism, double s_low,
                             double s_high, const SolverConfig& config = {});

// Runs fn(0..n-1) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace congestion
