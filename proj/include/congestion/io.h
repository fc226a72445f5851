#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "congestion/atomic.h"
#include "congestion/equilibrium.h"
#include "congestion/incentives.h"
#include "congestion/latency.h"
#include "congestion/network.h"
#include "congestion/poa.h"

namespace congestion {

using Json = nlohmann::json;

// All parse functions throw std::invalid_argument with the offending field
// in the message.

// {kind:"affine", a, b} or {kind:"poly", coeffs:[c0, ..., cp]}.
LatencyFunction latency_from_json(const Json& j);
Json latency_to_json(const LatencyFunction& l);

// {name?, vertices:[...], edges:[{id, tail, head, latency}], od:[{origin, dest, rate}]}.
ProblemSpec problem_spec_from_json(const Json& j);
RoutingProblem problem_from_json(const Json& j);
Json problem_to_json(const RoutingProblem& problem);

Json read_json_file(const std::string& path);
RoutingProblem load_problem(const std::string& path);

// {kind, params:{...}}. Kinds: none, mc, smc (s_low, s_high), affine (k1, k2),
// opt-toll (beta), opt-subsidy (beta), robust-toll / robust-subsidy (beta,
// s_low, s_high), nominal (lambda, base:{...}).
IncentiveMechanism mechanism_from_json(const Json& j);
Json mechanism_to_json(const IncentiveMechanism& m);

// {per_od:[[{s, fraction}, ...], ...], s_low?, s_high?}.
SensitivityProfile profile_from_json(const Json& j);
Json profile_to_json(const SensitivityProfile& p);

Json flow_to_json(const RoutingProblem& problem, const FlowAssignment& flow);
Json result_to_json(const RoutingProblem& problem, const EquilibriumResult& r);
Json report_to_json(const RoutingProblem& problem, const PoaReport& r);

struct AtomicSpec {
  std::vector<BasisFunction> basis;
  int n = 1;
  std::optional<double> beta;
  IncentiveSign sign = IncentiveSign::kToll;
};

// {basis:[{kind:"monomial", degree} | {kind:"poly", coeffs}], n, beta?, sign?}.
AtomicSpec atomic_spec_from_json(const Json& j);
Json atomic_report_to_json(const AtomicLpReport& r);

IncentiveSign sign_from_string(const std::string& s);
std::string to_string(IncentiveSign s);

}  // namespace congestion
