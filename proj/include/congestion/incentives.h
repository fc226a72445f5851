#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "congestion/latency.h"
#include "congestion/network.h"

namespace congestion {

enum class SignClass { kZero, kToll, kSubsidy, kMixed };

std::string to_string(SignClass s);

// Flow-dependent incentive attached to one edge.
struct IncentiveFunction {
  Polynomial poly;
  SignClass sign = SignClass::kZero;

  double operator()(double f) const { return poly(f); }
};

// Classifies the sign of p on a uniform grid over [0, upper].
SignClass classify_sign(const Polynomial& p, double upper, std::size_t grid_points = 1001);

enum class Awareness { kAgnostic, kAware };

// Incentive expressed as a linear rule on the latency polynomial:
//   tau = mc * f l'(f) + lat * l(f) + a * (slope f) + b * (intercept)
// The a/b terms exist only for affine latencies.
struct LinearRule {
  double mc = 0.0;
  double lat = 0.0;
  double a = 0.0;
  double b = 0.0;

  bool needs_affine() const { return a != 0.0 || b != 0.0; }
};

// Mechanism mapping (latency, edge, problem) to an incentive function.
// Instances are immutable and cheap to copy.
class IncentiveMechanism {
 public:
  enum class Kind { kNone, kMarginalCost, kScaledMarginalCost, kAffine, kOptToll, kOptSubsidy, kNominal, kEdgeTable };

  static IncentiveMechanism none();
  // tau(f) = f l'(f).
  static IncentiveMechanism marginal_cost();
  // tau(af + b) = a f / sqrt(s_low s_high); affine latencies only.
  static IncentiveMechanism scaled_marginal_cost(double s_low, double s_high);
  // tau(af + b) = k1 a f + k2 b.
  static IncentiveMechanism affine(double k1, double k2);
  // Optimal bounded network-agnostic toll on affine latencies: min(beta, 1) a f.
  static IncentiveMechanism opt_bounded_toll_affine(double beta);
  // Optimal bounded network-agnostic subsidy on affine latencies: -min(beta, 1/2) b.
  static IncentiveMechanism opt_bounded_subsidy_affine(double beta);
  // lambda * T + (lambda - 1) * l.
  static IncentiveMechanism nominal_equivalent(const IncentiveMechanism& base, double lambda);
  // Network-aware mechanism with an explicit incentive per edge id; edges
  // missing from the table get no incentive.
  static IncentiveMechanism edge_table(std::map<std::string, Polynomial> table);

  Kind kind() const { return kind_; }
  Awareness awareness() const { return table_.empty() ? Awareness::kAgnostic : Awareness::kAware; }
  // Declared bound beta for the bounded mechanisms.
  std::optional<double> bound() const { return bound_; }
  const LinearRule& rule() const { return rule_; }

  // Constructor parameters, by name (e.g. "beta", "lambda", "k1").
  const std::vector<std::pair<std::string, double>>& params() const { return params_; }
  // For kNominal, the transformed mechanism.
  const IncentiveMechanism* base() const { return base_.get(); }

  // Throws std::invalid_argument if the rule needs an affine latency and gets
  // a higher-degree polynomial.
  Polynomial incentive_poly(const LatencyFunction& latency, const std::string& edge_id) const;
  IncentiveFunction apply(const LatencyFunction& latency, std::size_t edge, const RoutingProblem& problem) const;
  std::vector<IncentiveFunction> apply_all(const RoutingProblem& problem) const;
  std::vector<Polynomial> incentive_polys(const RoutingProblem& problem) const;

  // Short human-readable descriptor, e.g. "nominal(mc, lambda=0.333333)".
  std::string describe() const;

 private:
  Kind kind_ = Kind::kNone;
  LinearRule rule_;
  double table_scale_ = 1.0;
  std::map<std::string, Polynomial> table_;
  std::optional<double> bound_;
  std::vector<std::pair<std::string, double>> params_;
  std::shared_ptr<const IncentiveMechanism> base_;
};

struct AffineCoeffs {
  double k1 = 0.0;
  double k2 = 0.0;
};

// k1 = beta, k2 = max{0, (beta^2 sL sU - 1) / (sL + sU + 2 beta sL sU)}.
AffineCoeffs opt_robust_toll_coeffs(double beta, double s_low, double s_high);
// k1 = 0, k2 = -min{beta, 1 / (sL + sU)}.
AffineCoeffs opt_robust_subsidy_coeffs(double beta, double s_low, double s_high);

struct SensitivityClass {
  double fraction = 1.0;
  double s = 1.0;
};

// Finite mixture of price sensitivities for each OD pair.
class SensitivityProfile {
 public:
  SensitivityProfile(std::vector<std::vector<SensitivityClass>> per_od, double s_low, double s_high);

  static SensitivityProfile homogeneous(std::size_t num_od, double s = 1.0);
  // One sensitivity value per OD pair; bounds are the min and max value.
  static SensitivityProfile per_od_constant(const std::vector<double>& s);
  // Each OD i puts fraction low_fraction[i] of its mass at s_low and the rest at s_high.
  static SensitivityProfile two_point(double s_low, double s_high, const std::vector<double>& low_fraction);

  const std::vector<std::vector<SensitivityClass>>& per_od() const { return per_od_; }
  std::size_t num_od() const { return per_od_.size(); }
  double s_low() const { return s_low_; }
  double s_high() const { return s_high_; }
  bool is_homogeneous() const;

 private:
  std::vector<std::vector<SensitivityClass>> per_od_;
  double s_low_;
  double s_high_;
};

// s / (lambda + s - s lambda), applied classwise and to the bounds.
double sensitivity_transform(double s, double lambda);
SensitivityProfile sensitivity_pushforward(const SensitivityProfile& profile, double lambda);

enum class IncentiveSign { kToll, kSubsidy };

struct BoundCheck {
  enum class Status { kOk, kTight, kViolated };
  Status status = Status::kOk;
  // Witness for kViolated.
  std::size_t edge = 0;
  double flow = 0.0;
  double value = 0.0;
};

// Checks 0 <= tau_e <= beta l_e (toll) or -beta l_e <= tau_e <= 0 (subsidy)
// on a 1001-point grid over [0, total demand]. Tight means that on every edge
// the bound holds with equality at some grid point where l_e > 0.
BoundCheck check_bound(const IncentiveMechanism& mechanism, const RoutingProblem& problem, double beta,
                       IncentiveSign sign, std::size_t grid_points = 1001);

}  // namespace congestion
