#include "congestion/poa.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace congestion {

namespace {

void require_beta(double beta) {
  if (!(beta >= 0.0) || std::isnan(beta)) throw std::invalid_argument("beta must be >= 0");
}

void require_positive_beta(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

void require_bounds(double s_low, double s_high) {
  if (!(s_low > 0.0) || !(s_high >= s_low) || !std::isfinite(s_high)) {
    throw std::invalid_argument("sensitivity bounds must satisfy 0 < s_low <= s_high");
  }
}

PoaReport finish(const RoutingProblem& problem, const IncentiveMechanism& mechanism, const SolverConfig& config,
                 WorstNash worst, double s_low, double s_high, std::optional<double> bound) {
  PoaReport rep;
  rep.instance_id = problem.name();
  rep.mechanism = mechanism.describe();
  rep.s_low = s_low;
  rep.s_high = s_high;
  rep.opt = social_optimum(problem, config);
  rep.l_opt = rep.opt.total_latency;
  if (!(rep.l_opt > 1e-15)) throw std::invalid_argument("optimal total latency is zero; price of anarchy is undefined");
  rep.l_nash = worst.latency;
  rep.ratio = rep.l_nash / rep.l_opt;
  rep.converged = !worst.approximate;
  rep.lower_bound = worst.lower_bound;
  rep.solves = worst.solves;
  rep.nash = std::move(worst.worst);
  rep.worst_profile = std::move(worst.profile);
  rep.closed_form_bound = bound;
  rep.within_bound = !bound || rep.ratio <= *bound + 1e-6;
  return rep;
}

}  // namespace

PoaReport poa_instance(const RoutingProblem& problem, const IncentiveMechanism& mechanism,
                       const SensitivityProfile& profile, const SolverConfig& config, std::optional<double> bound) {
  auto worst = worst_nash_latency(problem, mechanism, profile, config);
  return finish(problem, mechanism, config, std::move(worst), profile.s_low(), profile.s_high(), bound);
}

PoaReport poa_instance(const RoutingProblem& problem, const IncentiveMechanism& mechanism, SensitivityBounds bounds,
                       const SolverConfig& config, std::optional<double> bound) {
  auto worst = worst_nash_latency(problem, mechanism, bounds.s_low, bounds.s_high, config);
  return finish(problem, mechanism, config, std::move(worst), bounds.s_low, bounds.s_high, bound);
}

double poa_bound_prop1_toll(double beta) {
  require_beta(beta);
  if (beta >= 1.0) return 1.0;
  return 4.0 / (3.0 + 2.0 * beta - beta * beta);
}

double poa_bound_prop1_subsidy(double beta) {
  require_beta(beta);
  if (beta >= 0.5) return 1.0;
  const double bh = 1.0 / (1.0 - beta) - 1.0;
  return 4.0 / (3.0 + 2.0 * bh - bh * bh);
}

double poa_bound_prop2_smc(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0, 1]");
  const double r = std::sqrt(q);
  return 4.0 / 3.0 * (1.0 - r / ((1.0 + r) * (1.0 + r)));
}

double prop2_nes_q(double s_low, double s_high) {
  require_bounds(s_low, s_high);
  const double q = s_low / s_high;
  const double g = std::sqrt(s_low * s_high);
  const double lambda = g / (1.0 + g);
  return lambda * q / (1.0 - q + lambda * q);
}

double poa_bound_prop2_nes(double s_low, double s_high) { return poa_bound_prop2_smc(prop2_nes_q(s_low, s_high)); }

double poa_bound_prop3(double beta, double s_low, double s_high) {
  require_positive_beta(beta);
  require_bounds(s_low, s_high);
  const double bs = beta * s_low;
  if (beta < 1.0 / std::sqrt(s_low * s_high)) return 4.0 / 3.0 * (1.0 - bs / ((1.0 + bs) * (1.0 + bs)));
  const double q = s_low / s_high;
  const double den = 1.0 + 2.0 * bs + q;
  return 4.0 / 3.0 * (1.0 - (1.0 + bs) * (q + bs) / (den * den));
}

double poa_bound_prop4(double beta, double s_low, double s_high) {
  require_positive_beta(beta);
  require_bounds(s_low, s_high);
  const double bs = beta * s_low;
  if (beta < 1.0 / (s_low + s_high)) return 4.0 / 3.0 * (1.0 - bs * (1.0 - bs));
  const double q = s_low / s_high;
  return 4.0 / 3.0 * (1.0 - q / ((1.0 + q) * (1.0 + q)));
}

Crossover thm5_crossover(double s_low, double s_high) {
  require_bounds(s_low, s_high);
  Crossover c;
  const double prod = s_low * s_high;
  c.scale = std::abs(prod - 1.0) <= 1e-9 ? 1.0 : 1.0 / std::sqrt(prod);
  c.s_low_normalized = c.scale * s_low;
  c.s_high_normalized = c.scale * s_high;
  // beta* = 1/s_U' in normalized units; incentives scale by 1/c alongside.
  c.beta_star = c.scale / c.s_high_normalized;
  return c;
}

RoutingProblem pigou_instance(int p, double demand) {
  if (p < 1) throw std::invalid_argument("Pigou degree p must be >= 1");
  ProblemSpec spec;
  spec.name = "pigou-p" + std::to_string(p);
  spec.vertices = {"o", "d"};
  std::vector<double> coeffs(static_cast<std::size_t>(p) + 1, 0.0);
  coeffs.back() = 1.0;
  spec.edges.push_back({"e1", "o", "d", p == 1 ? LatencyFunction::affine(1.0, 0.0) : LatencyFunction::polynomial(coeffs)});
  spec.edges.push_back({"e2", "o", "d", LatencyFunction::constant(1.0)});
  spec.od.push_back({"o", "d", demand});
  return build_problem(spec);
}

RoutingProblem fig1_instance() {
  ProblemSpec spec;
  spec.name = "fig1";
  spec.vertices = {"v1", "v2", "v3", "v4"};
  spec.edges = {
      {"e1", "v1", "v4", LatencyFunction::polynomial({0.0, 0.0, 4.0})},
      {"e2", "v1", "v3", LatencyFunction::constant(0.5)},
      {"e3", "v2", "v3", LatencyFunction::constant(0.5)},
      {"e4", "v2", "v4", LatencyFunction::affine(2.0, 0.0)},
      {"e5", "v3", "v4", LatencyFunction::constant(0.5)},
  };
  spec.od = {{"v1", "v4", 0.5}, {"v2", "v4", 0.5}};
  return build_problem(spec);
}

namespace {

std::string coeff_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

ParallelInstance parallel_affine_instance(const std::vector<double>& a, const std::vector<double>& b, double rate,
                                          const SolverConfig& config) {
  if (a.empty() || b.empty()) throw std::invalid_argument("parallel instance needs nonempty coefficient lists");
  if (a.size() != b.size()) throw std::invalid_argument("slope and intercept lists differ in length");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  ProblemSpec spec;
  std::string name = "parallel-a";
  for (std::size_t e = 0; e < a.size(); ++e) name += (e ? "_" : "") + coeff_tag(a[e]);
  name += "-b";
  for (std::size_t e = 0; e < b.size(); ++e) name += (e ? "_" : "") + coeff_tag(b[e]);
  spec.name = name;
  spec.vertices = {"o", "d"};
  for (std::size_t e = 0; e < a.size(); ++e) {
    spec.edges.push_back({"e" + std::to_string(e + 1), "o", "d", LatencyFunction::affine(a[e], b[e])});
  }
  spec.od.push_back({"o", "d", rate});

  ParallelInstance inst{build_problem(spec), false, {}};
  inst.nash = nash_flow_homogeneous(inst.problem, IncentiveMechanism::none(), config);
  inst.fully_utilized = inst.nash.converged && std::all_of(inst.nash.edge_flows.begin(), inst.nash.edge_flows.end(),
                                                           [](double f) { return f > 1e-9; });
  return inst;
}

std::vector<CorpusEntry> parallel_affine_corpus() {
  static const std::vector<CorpusEntry> corpus = [] {
    const double vals[] = {0.0, 0.5, 1.0, 2.0};
    std::vector<std::pair<double, double>> types;
    for (double a : vals) {
      for (double b : vals) {
        if (a != 0.0 || b != 0.0) types.emplace_back(a, b);
      }
    }
    std::vector<CorpusEntry> candidates;
    const auto consider = [&](const std::vector<std::size_t>& idx) {
      std::vector<double> a, b;
      int constant_edges = 0;
      for (std::size_t i : idx) {
        a.push_back(types[i].first);
        b.push_back(types[i].second);
        if (types[i].first == 0.0) ++constant_edges;
      }
      // Several constant edges make the untolled split ambiguous.
      if (constant_edges > 1) return;
      auto inst = parallel_affine_instance(a, b, 1.0);
      if (inst.fully_utilized) candidates.push_back({inst.problem.name(), std::move(inst.problem)});
    };
    const std::size_t t = types.size();
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = i; j < t; ++j) consider({i, j});
    }
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = i; j < t; ++j) {
        for (std::size_t k = j; k < t; ++k) consider({i, j, k});
      }
    }
    std::vector<CorpusEntry> picked;
    const std::size_t want = 25;
    for (std::size_t k = 0; k < want && k < candidates.size(); ++k) {
      picked.push_back(candidates[k * candidates.size() / want]);
    }
    return picked;
  }();
  return corpus;
}

std::vector<CorpusEntry> full_test_corpus() {
  std::vector<CorpusEntry> out = parallel_affine_corpus();
  out.push_back({"fig1", fig1_instance()});
  for (int p : {1, 2, 4}) out.push_back({"pigou-p" + std::to_string(p), pigou_instance(p)});
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 1) out.push_back(lo);
  for (std::size_t i = 0; n > 1 && i < n; ++i) {
    out.push_back(i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5"}; }

SweepSpec preset_spec(const std::string& name, std::size_t points) {
  SweepSpec spec;
  spec.name = name;
  if (name == "fig3") {
    spec.kind = SweepKind::kBoundedAffine;
    spec.grid = linspace(0.0, 1.0, points);
  } else if (name == "fig4") {
    spec.kind = SweepKind::kRobustScaled;
    spec.grid = linspace(1.0, 10.0, points);
  } else if (name == "fig5") {
    spec.kind = SweepKind::kRobustBounded;
    spec.grid = linspace(1.0, 16.0, points);
    spec.beta = 0.4;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected fig3, fig4 or fig5)");
  }
  return spec;
}

RoutingProblem robust_witness_instance() {
  ProblemSpec spec;
  spec.name = "parallel-a1_1-b0_0.5";
  spec.vertices = {"o", "d"};
  spec.edges = {{"e1", "o", "d", LatencyFunction::affine(1.0, 0.0)}, {"e2", "o", "d", LatencyFunction::affine(1.0, 0.5)}};
  spec.od = {{"o", "d", 1.0}};
  return build_problem(spec);
}

namespace {

double empirical_ratio(const RoutingProblem& problem, const IncentiveMechanism& mechanism, double s_low,
                       double s_high, const SolverConfig& config) {
  return poa_instance(problem, mechanism, SensitivityBounds{s_low, s_high}, config).ratio;
}

BoundSample sample_point(const SweepSpec& spec, double x, const SolverConfig& config) {
  BoundSample s;
  s.param = x;
  switch (spec.kind) {
    case SweepKind::kBoundedAffine: {
      s.toll_bound = poa_bound_prop1_toll(x);
      s.subsidy_bound = poa_bound_prop1_subsidy(x);
      if (spec.empirical) {
        // Pigou demands at which each bound is attained.
        const auto toll_net = pigou_instance(1, 1.0 / (1.0 + std::min(x, 1.0)));
        const auto sub_net = pigou_instance(1, 1.0 - std::min(x, 0.5));
        s.empirical_toll = empirical_ratio(toll_net, IncentiveMechanism::opt_bounded_toll_affine(x), 1, 1, config);
        s.empirical_subsidy = empirical_ratio(sub_net, IncentiveMechanism::opt_bounded_subsidy_affine(x), 1, 1, config);
        s.instance_id = "pigou-witness";
      }
      break;
    }
    case SweepKind::kRobustScaled:
    case SweepKind::kRobustBounded: {
      if (!(x >= 1.0)) throw std::invalid_argument("heterogeneity ratio s_U/s_L must be >= 1");
      // The scaled-toll comparison works on [q, 1]; the bounded comparison on s_L s_U = 1.
      const bool scaled = spec.kind == SweepKind::kRobustScaled;
      const double sl = scaled ? 1.0 / x : 1.0 / std::sqrt(x);
      const double su = scaled ? 1.0 : std::sqrt(x);
      IncentiveMechanism toll = IncentiveMechanism::none();
      IncentiveMechanism sub = IncentiveMechanism::none();
      if (scaled) {
        s.toll_bound = poa_bound_prop2_smc(1.0 / x);
        s.subsidy_bound = poa_bound_prop2_nes(sl, su);
        toll = IncentiveMechanism::scaled_marginal_cost(sl, su);
        sub = IncentiveMechanism::nominal_equivalent(toll, 1.0 / (1.0 + 1.0 / std::sqrt(sl * su)));
      } else {
        s.toll_bound = poa_bound_prop3(spec.beta, sl, su);
        s.subsidy_bound = poa_bound_prop4(spec.beta, sl, su);
        const auto kt = opt_robust_toll_coeffs(spec.beta, sl, su);
        const auto ks = opt_robust_subsidy_coeffs(spec.beta, sl, su);
        toll = IncentiveMechanism::affine(kt.k1, kt.k2);
        sub = IncentiveMechanism::affine(ks.k1, ks.k2);
      }
      if (spec.empirical) {
        const auto net = robust_witness_instance();
        s.empirical_toll = empirical_ratio(net, toll, sl, su, config);
        s.empirical_subsidy = empirical_ratio(net, sub, sl, su, config);
        s.instance_id = net.name();
      }
      break;
    }
  }
  return s;
}

}  // namespace

BoundCurve sweep(const SweepSpec& spec, const SolverConfig& config) {
  if (spec.grid.empty()) throw std::invalid_argument("sweep grid is empty");
  BoundCurve curve;
  curve.name = spec.name;
  curve.parameter = spec.kind == SweepKind::kBoundedAffine ? "beta" : "s_high/s_low";
  curve.samples.resize(spec.grid.size());
  SolverConfig inner = config;
  inner.jobs = 1;
  parallel_for(spec.grid.size(), config.jobs,
               [&](std::size_t i) { curve.samples[i] = sample_point(spec, spec.grid[i], inner); });
  return curve;
}

void write_csv(std::ostream& os, const BoundCurve& curve) {
  const auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  const auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  os << "param,toll_bound,subsidy_bound,empirical_toll,empirical_subsidy,instance_id\n";
  for (const auto& s : curve.samples) {
    os << num(s.param) << ',' << num(s.toll_bound) << ',' << num(s.subsidy_bound) << ',' << opt(s.empirical_toll)
       << ',' << opt(s.empirical_subsidy) << ',' << s.instance_id << '\n';
  }
}

}  // namespace congestion
