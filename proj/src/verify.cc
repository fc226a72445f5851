#include "congestion/verify.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <stdexcept>

#include "congestion/poa.h"

namespace congestion {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Suite {
 public:
  explicit Suite(std::vector<VerifyCheck>& out) : out_(out) {}

  void near(const std::string& name, double expected, double actual, double tol, bool converged = true) {
    const bool ok = std::isfinite(actual) && std::abs(actual - expected) <= tol;
    out_.push_back({name, fmt(expected), fmt(actual), "+-" + fmt(tol), ok, !ok && !converged});
  }
  // lo <= actual <= hi.
  void within(const std::string& name, const std::string& expected, double actual, double lo, double hi,
              const std::string& tol, bool converged = true) {
    const bool ok = std::isfinite(actual) && actual >= lo && actual <= hi;
    out_.push_back({name, expected, fmt(actual), tol, ok, !ok && !converged});
  }
  void truth(const std::string& name, const std::string& expected, const std::string& actual, bool ok) {
    out_.push_back({name, expected, actual, "-", ok, false});
  }

 private:
  std::vector<VerifyCheck>& out_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const char* kEdgeNames[] = {"e1", "e2", "e3", "e4", "e5"};

void flows_near(Suite& s, const std::string& prefix, const std::vector<double>& expected,
                const std::vector<double>& actual, bool converged) {
  for (std::size_t e = 0; e < expected.size(); ++e) {
    const double a = e < actual.size() ? actual[e] : NAN;
    s.near(prefix + "_" + kEdgeNames[e], expected[e], a, 0.01, converged);
  }
}

void group_ex1(Suite& s, const SolverConfig& config) {
  const auto t0 = Clock::now();
  const RoutingProblem net = fig1_instance();
  const SensitivityProfile hom = SensitivityProfile::homogeneous(net.num_od());
  const PoaReport none = poa_instance(net, IncentiveMechanism::none(), hom, config);
  const PoaReport mc = poa_instance(net, IncentiveMechanism::marginal_cost(), hom, config);
  s.near("ex1.l_opt", 0.683, none.l_opt, 0.005, none.opt.converged);
  flows_near(s, "ex1.nash", {0.5, 0.0, 0.0, 0.5, 0.0}, none.nash.edge_flows, none.converged);
  s.near("ex1.poa_none", 1.465, none.ratio, 0.01, none.converged);
  s.near("ex1.poa_mc", 1.0, mc.ratio, 0.005, mc.converged);
  s.within("ex1.runtime_s", "< 5", seconds_since(t0), 0.0, 5.0, "-");
}

void group_ex3(Suite& s, const SolverConfig& config) {
  const auto t0 = Clock::now();
  const RoutingProblem net = fig1_instance();
  const SensitivityProfile prof = SensitivityProfile::per_od_constant({2.0, 0.5});
  const PoaReport mc = poa_instance(net, IncentiveMechanism::marginal_cost(), prof, config);
  const auto sub_mech = IncentiveMechanism::nominal_equivalent(IncentiveMechanism::marginal_cost(), 1.0 / 3.0);
  const PoaReport sub = poa_instance(net, sub_mech, prof, config);
  s.near("ex3.poa_mc", 1.04, mc.ratio, 0.01, mc.converged);
  flows_near(s, "ex3.mc", {0.224, 0.276, 0.167, 0.333, 0.443}, mc.nash.edge_flows, mc.converged);
  s.near("ex3.poa_subsidy", 1.32, sub.ratio, 0.01, sub.converged);
  flows_near(s, "ex3.subsidy", {0.0, 0.5, 0.137, 0.363, 0.637}, sub.nash.edge_flows, sub.converged);
  s.within("ex3.runtime_s", "< 10", seconds_since(t0), 0.0, 10.0, "-");
}

void group_prop1(Suite& s, const Evaluators& ev, const SolverConfig& config) {
  s.near("prop1.toll_beta0", 4.0 / 3.0, ev.prop1_toll(0.0), 1e-12);
  s.near("prop1.subsidy_beta0", 4.0 / 3.0, ev.prop1_subsidy(0.0), 1e-12);
  s.near("prop1.toll_beta1", 1.0, ev.prop1_toll(1.0), 1e-12);
  s.near("prop1.subsidy_beta0.5", 1.0, ev.prop1_subsidy(0.5), 1e-12);
  int violations = 0;
  for (int k = 1; k <= 101; ++k) {
    const double b = k / 102.0;
    if (!(ev.prop1_subsidy(b) < ev.prop1_toll(b))) ++violations;
  }
  s.truth("prop1.subsidy_below_toll_101", "0 violations", std::to_string(violations) + " violations",
          violations == 0);
  for (double b : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const auto toll_net = pigou_instance(1, 1.0 / (1.0 + std::min(b, 1.0)));
    const auto sub_net = pigou_instance(1, 1.0 - std::min(b, 0.5));
    const SensitivityProfile hom = SensitivityProfile::homogeneous(1);
    const PoaReport t = poa_instance(toll_net, IncentiveMechanism::opt_bounded_toll_affine(b), hom, config);
    const PoaReport u = poa_instance(sub_net, IncentiveMechanism::opt_bounded_subsidy_affine(b), hom, config);
    const double bt = ev.prop1_toll(b), bu = ev.prop1_subsidy(b);
    s.within("prop1.witness_toll_beta" + fmt(b), fmt(bt), t.ratio, bt - 2e-2, bt + 1e-3, "+1e-3/-2e-2", t.converged);
    s.within("prop1.witness_subsidy_beta" + fmt(b), fmt(bu), u.ratio, bu - 2e-2, bu + 1e-3, "+1e-3/-2e-2",
             u.converged);
  }
}

void group_prop2(Suite& s, const Evaluators& ev, const SolverConfig& config) {
  const RoutingProblem net = robust_witness_instance();
  for (double q : {1.0, 0.5, 0.25, 1.0 / 9.0}) {
    const std::string tag = "_q" + fmt(q);
    const double toll = ev.prop2_smc(q);
    const double sub = ev.prop2_nes(q, 1.0);
    const double qhat = prop2_nes_q(q, 1.0);
    if (q == 1.0) {
      s.near("prop2.qhat" + tag, 1.0, qhat, 1e-9);
      s.near("prop2.smc_bound" + tag, 1.0, toll, 1e-9);
      s.near("prop2.nes_bound" + tag, 1.0, sub, 1e-9);
    } else {
      s.within("prop2.qhat" + tag, "< " + fmt(q), qhat, -INFINITY, std::nextafter(q, 0.0), "strict");
      s.truth("prop2.nes_above_smc" + tag, "> " + fmt(toll), fmt(sub), sub > toll);
    }
    const auto smc = IncentiveMechanism::scaled_marginal_cost(q, 1.0);
    const auto nes = IncentiveMechanism::nominal_equivalent(smc, 1.0 / (1.0 + 1.0 / std::sqrt(q)));
    const PoaReport rt = poa_instance(net, smc, SensitivityBounds{q, 1.0}, config);
    const PoaReport rs = poa_instance(net, nes, SensitivityBounds{q, 1.0}, config);
    s.within("prop2.empirical_smc" + tag, "<= " + fmt(toll), rt.ratio, 1.0 - 1e-9, toll + 1e-3, "+1e-3",
             rt.converged);
    s.within("prop2.empirical_nes" + tag, "<= " + fmt(sub), rs.ratio, 1.0 - 1e-9, sub + 1e-3, "+1e-3", rs.converged);
  }
}

// Robust bounded toll (prop3) or subsidy (prop4): saturated homogeneous value
// and an empirical cross-check at beta = 0.4, s in [1/2, 2].
void group_robust(Suite& s, const Evaluators& ev, const SolverConfig& config, bool toll) {
  const std::string g = toll ? "prop3" : "prop4";
  const auto& f = toll ? ev.prop3 : ev.prop4;
  s.near(g + ".homogeneous_saturated", 1.0, f(2.0, 1.0, 1.0), 1e-12);
  const RoutingProblem net = robust_witness_instance();
  for (double beta : {0.2, 0.4, 0.8}) {
    const double lo = 0.5, hi = 2.0;
    const AffineCoeffs k = toll ? opt_robust_toll_coeffs(beta, lo, hi) : opt_robust_subsidy_coeffs(beta, lo, hi);
    const PoaReport r = poa_instance(net, IncentiveMechanism::affine(k.k1, k.k2), SensitivityBounds{lo, hi}, config);
    const double bound = f(beta, lo, hi);
    s.within(g + ".empirical_beta" + fmt(beta), "<= " + fmt(bound), r.ratio, 1.0 - 1e-9, bound + 1e-3, "+1e-3",
             r.converged);
  }
}

void group_thm5(Suite& s, const Evaluators& ev) {
  for (double su : {1.5, 2.0, 4.0}) {
    const double sl = 1.0 / su;
    const std::string tag = "_sU" + fmt(su);
    const Crossover c = thm5_crossover(sl, su);
    s.near("thm5.beta_star" + tag, 1.0 / su, c.beta_star, 1e-12);
    const double b = 1.0 / su;
    s.near("thm5.equal_at_crossover" + tag, 0.0, ev.prop3(b, sl, su) - ev.prop4(b, sl, su), 1e-9);
    int below = 0, above = 0;
    for (int k = 1; k <= 50; ++k) {
      const double lo = b * k / 51.0;
      if (!(ev.prop4(lo, sl, su) < ev.prop3(lo, sl, su))) ++below;
      const double up = b + k / 50.0;
      if (!(ev.prop3(up, sl, su) < ev.prop4(up, sl, su))) ++above;
    }
    s.truth("thm5.subsidy_better_below" + tag, "0 of 50", std::to_string(below) + " of 50", below == 0);
    s.truth("thm5.toll_better_above" + tag, "0 of 50", std::to_string(above) + " of 50", above == 0);
  }
}

}  // namespace

Evaluators Evaluators::standard() {
  return {poa_bound_prop1_toll, poa_bound_prop1_subsidy, poa_bound_prop2_smc, poa_bound_prop2_nes,
          poa_bound_prop3,      poa_bound_prop4};
}

Evaluators Evaluators::with_fault(const std::string& name) const {
  Evaluators e = *this;
  if (name == "prop1") {
    e.prop1_toll = [f = prop1_toll](double b) { return f(b) + 0.01; };
    e.prop1_subsidy = [f = prop1_subsidy](double b) { return f(b) + 0.01; };
  } else if (name == "prop2") {
    e.prop2_smc = [f = prop2_smc](double q) { return f(q) + 0.01; };
    e.prop2_nes = [f = prop2_nes](double lo, double hi) { return f(lo, hi) + 0.01; };
  } else if (name == "prop3") {
    e.prop3 = [f = prop3](double b, double lo, double hi) { return f(b, lo, hi) + 0.01; };
  } else if (name == "prop4") {
    e.prop4 = [f = prop4](double b, double lo, double hi) { return f(b, lo, hi) + 0.01; };
  } else {
    throw std::invalid_argument("unknown fault '" + name + "' (expected prop1, prop2, prop3 or prop4)");
  }
  return e;
}

std::vector<std::string> verify_groups() { return {"ex1", "ex3", "prop1", "prop2", "prop3", "prop4", "thm5"}; }

std::vector<VerifyCheck> run_verify(const VerifyOptions& options) {
  Evaluators ev = Evaluators::standard();
  for (const auto& f : options.faults) ev = ev.with_fault(f);

  // "group.check" selects within one group; a bare word selects groups by substring.
  const std::string& filter = options.filter;
  const auto dot = filter.find('.');
  auto wanted = [&](const std::string& g) {
    if (filter.empty()) return true;
    if (dot != std::string::npos) return filter.substr(0, dot) == g;
    return g.find(filter) != std::string::npos;
  };

  std::vector<VerifyCheck> all;
  Suite s(all);
  for (const auto& g : verify_groups()) {
    if (!wanted(g)) continue;
    if (g == "ex1") group_ex1(s, options.config);
    if (g == "ex3") group_ex3(s, options.config);
    if (g == "prop1") group_prop1(s, ev, options.config);
    if (g == "prop2") group_prop2(s, ev, options.config);
    if (g == "prop3") group_robust(s, ev, options.config, true);
    if (g == "prop4") group_robust(s, ev, options.config, false);
    if (g == "thm5") group_thm5(s, ev);
  }
  if (dot != std::string::npos) {
    std::erase_if(all, [&](const VerifyCheck& c) { return c.name.rfind(filter, 0) != 0; });
  }
  if (all.empty()) throw std::invalid_argument("no checks match filter '" + filter + "'");
  return all;
}

void print_checks(std::ostream& os, const std::vector<VerifyCheck>& checks) {
  std::size_t w = 5;
  for (const auto& c : checks) w = std::max(w, c.name.size());
  os << std::left << std::setw(static_cast<int>(w)) << "check" << "  " << std::setw(12) << "expected" << "  "
     << std::setw(12) << "actual" << "  " << std::setw(12) << "tolerance" << "  status\n";
  std::size_t failed = 0;
  for (const auto& c : checks) {
    os << std::setw(static_cast<int>(w)) << c.name << "  " << std::setw(12) << c.expected << "  " << std::setw(12)
       << c.actual << "  " << std::setw(12) << c.tolerance << "  " << (c.pass ? "PASS" : "FAIL") << "\n";
    if (!c.pass) ++failed;
  }
  os << (checks.size() - failed) << "/" << checks.size() << " checks passed\n";
}

}  // namespace congestion
