#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "congestion/equilibrium.h"
#include "congestion/incentives.h"
#include "congestion/network.h"

namespace congestion {

struct SensitivityBounds {
  double s_low = 1.0;
  double s_high = 1.0;
};

struct PoaReport {
  std::string instance_id;
  std::string mechanism;
  double s_low = 1.0;
  double s_high = 1.0;
  double l_nash = 0.0;
  double l_opt = 0.0;
  double ratio = 0.0;
  std::optional<double> closed_form_bound;
  bool within_bound = true;
  // Every sub-solve converged.
  bool converged = true;
  // l_nash is the worst equilibrium found, not a certified sup.
  bool lower_bound = true;
  std::size_t solves = 0;
  EquilibriumResult nash;
  EquilibriumResult opt;
  std::optional<SensitivityProfile> worst_profile;
};

// Worst Nash latency (over restarts) divided by the optimal latency. Throws
// std::invalid_argument when the optimal latency is zero.
PoaReport poa_instance(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                       const SensitivityProfile& profile, const SolverConfig& config = {},
                       std::optional<double> bound = std::nullopt);
// Same, searching extremal two-class profiles within the bounds.
PoaReport poa_instance(const RoutingProblem& problem, const IncentiveMechanism& mechanism, SensitivityBounds bounds,
                       const SolverConfig& config = {}, std::optional<double> bound = std::nullopt);

// 4/(3 + 2b - b^2) for b in [0,1), 1 beyond.
double poa_bound_prop1_toll(double beta);
// Toll formula at b/(1-b) for b in [0,1/2), 1 beyond.
double poa_bound_prop1_subsidy(double beta);
// (4/3)(1 - sqrt(q)/(1+sqrt(q))^2), q = s_L/s_U in (0,1].
double poa_bound_prop2_smc(double q);
// lambda q / (1 - q + lambda q) with lambda = sqrt(sL sU)/(1 + sqrt(sL sU)).
double prop2_nes_q(double s_low, double s_high);
double poa_bound_prop2_nes(double s_low, double s_high);
double poa_bound_prop3(double beta, double s_low, double s_high);
double poa_bound_prop4(double beta, double s_low, double s_high);

struct Crossover {
  double beta_star = 1.0;
  // Factor c with (c s_L)(c s_U) = 1.
  double scale = 1.0;
  double s_low_normalized = 1.0;
  double s_high_normalized = 1.0;
};

// Bound at which the optimal robust toll and subsidy have equal PoA. Inputs
// are rescaled to s_L s_U = 1; beta* is reported in the original units,
// where it equals 1/s_U.
Crossover thm5_crossover(double s_low, double s_high);

// Two parallel edges o -> d with l1 = f^p, l2 = 1.
RoutingProblem pigou_instance(int p, double demand = 1.0);
// Edges ordered as in the figure: e1 = 4f^2, e2 = e3 = e5 = 1/2, e4 = 2f.
RoutingProblem fig1_instance();

struct ParallelInstance {
  RoutingProblem problem;
  // Untolled Nash flow is positive on every edge.
  bool fully_utilized = false;
  EquilibriumResult nash;
};

ParallelInstance parallel_affine_instance(const std::vector<double>& a, const std::vector<double>& b, double rate,
                                          const SolverConfig& config = {});

struct CorpusEntry {
  std::string id;
  RoutingProblem problem;
};

// 25 fully-utilized parallel affine instances with coefficients in {0, 1/2, 1, 2}.
std::vector<CorpusEntry> parallel_affine_corpus();
// The parallel corpus plus the figure network and Pigou p in {1, 2, 4}.
std::vector<CorpusEntry> full_test_corpus();

enum class SweepKind {
  // Optimal bounded toll vs subsidy, parameter beta.
  kBoundedAffine,
  // Scaled marginal-cost toll vs nominally equivalent subsidy, parameter s_U/s_L.
  kRobustScaled,
  // Optimal bounded robust toll vs subsidy at fixed beta, parameter s_U/s_L.
  kRobustBounded,
};

struct SweepSpec {
  std::string name;
  SweepKind kind = SweepKind::kBoundedAffine;
  std::vector<double> grid;
  double beta = 0.4;
  bool empirical = false;
};

struct BoundSample {
  double param = 0.0;
  double toll_bound = 0.0;
  double subsidy_bound = 0.0;
  std::optional<double> empirical_toll;
  std::optional<double> empirical_subsidy;
  std::string instance_id;
};

struct BoundCurve {
  std::string name;
  std::string parameter;
  std::vector<BoundSample> samples;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

// fig3, fig4 or fig5; throws std::invalid_argument for other names.
SweepSpec preset_spec(const std::string& name, std::size_t points = 101);
std::vector<std::string> preset_names();

// Throws std::invalid_argument on an empty grid.
BoundCurve sweep(const SweepSpec& spec, const SolverConfig& config = {});

void write_csv(std::ostream& os, const BoundCurve& curve);

// Fully-utilized parallel instance used for the robust-mechanism cross-checks.
RoutingProblem robust_witness_instance();

}  // namespace congestion
