#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "congestion/incentives.h"
#include "congestion/latency.h"
#include "congestion/lp.h"

namespace congestion {

// Basis latency on integer loads; b(0) = 0 by convention.
class BasisFunction {
 public:
  explicit BasisFunction(Polynomial p, std::string name = {});
  static BasisFunction monomial(int degree);

  double operator()(int x) const { return x <= 0 ? 0.0 : poly_(static_cast<double>(x)); }
  const Polynomial& poly() const { return poly_; }
  const std::string& name() const { return name_; }

 private:
  Polynomial poly_;
  std::string name_;
};

// {1, x, ..., x^degree}.
std::vector<BasisFunction> polynomial_basis(int degree);

struct AtomicLp {
  LpProblem lp;
  int n = 0;
  std::size_t rho = 0;
  // f[k - 1] is the variable f(k), k = 1..n.
  std::vector<std::size_t> f;
  std::optional<std::size_t> nu;
  std::optional<double> beta;
};

// max rho s.t. b(x+z)(x+z) - rho b(x+y)(x+y) + f(x+y) y - f(x+y+1) z >= 0 for
// all x, y, z >= 0 with 1 <= x+y+z <= n, f >= 0 and f(0) = f(n+1) = 0.
AtomicLp build_lp(const BasisFunction& b, int n);

// Adds nu >= 0 and, for k = 1..n, the rows
//   toll:    0 <= f(k) - nu b(k) <= nu beta b(k)
//   subsidy: -nu beta b(k) <= f(k) - nu b(k) <= 0
void add_budget_constraints(AtomicLp& lp, double beta, IncentiveSign sign, const BasisFunction& b);

// tau(k) = f(k) - b(k), or f(k)/nu - b(k) for a budgeted LP; tau[0] = 0.
std::vector<double> optimal_incentive_from_lp(const AtomicLp& lp, const LpSolution& solution, const BasisFunction& b);

struct BasisLpResult {
  std::string basis;
  double rho = 0.0;
  double poa = 0.0;
  std::optional<double> nu;
  std::vector<double> f;
  std::vector<double> tau;
  LpSolution solution;
};

struct AtomicLpReport {
  int n = 0;
  std::optional<double> beta;
  IncentiveSign sign = IncentiveSign::kToll;
  std::vector<BasisLpResult> per_basis;
  // max over basis elements of 1/rho.
  double poa = 0.0;
  bool all_optimal = true;
  bool all_certified = true;
};

// One LP per basis element; budget rows only when beta is set. Non-optimal
// LPs keep their status in per_basis and clear all_optimal.
AtomicLpReport solve_atomic_lp(const std::vector<BasisFunction>& basis, int n, std::optional<double> beta,
                               IncentiveSign sign = IncentiveSign::kToll, std::size_t jobs = 1);

struct AtomicGame {
  int n = 0;
  // latency[r][k] for loads k = 0..n.
  std::vector<std::vector<double>> latency;
  // actions[i][a] lists the resources of action a of player i.
  std::vector<std::vector<std::vector<std::size_t>>> actions;
};

// Per-resource table over loads 0..n; an empty table means no incentive.
using ResourceTable = std::vector<std::vector<double>>;

// n players choosing one of the resources; resource r has latency
// sum_j coeffs[r][j] b_j.
AtomicGame parallel_game(int n, const std::vector<std::vector<double>>& coeffs, const std::vector<BasisFunction>& basis);
// Resource incentives sum_j coeffs[r][j] tau_j.
ResourceTable combine_incentives(const std::vector<std::vector<double>>& coeffs,
                                 const std::vector<std::vector<double>>& basis_tau);

using Profile = std::vector<std::size_t>;

double atomic_total_latency(const AtomicGame& game, const Profile& profile);

// All pure profiles in which no player improves by more than 1e-9. Player
// cost is sum over its resources of l(load) + s_i tau(load).
std::vector<Profile> atomic_nash_enumerate(const AtomicGame& game, const ResourceTable& tau,
                                           const std::vector<double>& sensitivities = {},
                                           std::size_t cap = 10000000);

struct AtomicPoa {
  double ratio = 0.0;
  double worst_nash = 0.0;
  double optimum = 0.0;
  std::size_t num_nash = 0;
  Profile worst_profile;
};

// Worst pure NE latency over the optimal latency, both by enumeration.
AtomicPoa atomic_poa(const AtomicGame& game, const ResourceTable& tau, std::size_t cap = 10000000);

}  // namespace congestion
