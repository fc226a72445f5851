#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "congestion/equilibrium.h"
#include "congestion/poa.h"

using namespace congestion;

namespace {

// Fig. 1 flows parameterised by OD1's flow x on e1 and OD2's flow y on {e3, e5}.
double fig1_latency(double x, double y) {
  const double f1 = x, f2 = 0.5 - x, f3 = y, f4 = 0.5 - y, f5 = f2 + f3;
  return f1 * 4 * f1 * f1 + 0.5 * (f2 + f3 + f5) + f4 * 2 * f4;
}

double ternary(const std::function<double(double)>& g, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    (g(a) < g(b) ? hi : lo) = g(a) < g(b) ? b : a;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> edges_of(const EquilibriumResult& r) { return r.edge_flows; }

void expect_flows(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t e = 0; e < want.size(); ++e) EXPECT_NEAR(got[e], want[e], tol) << "edge " << e;
}

std::vector<IncentiveMechanism> corpus_mechanisms(const RoutingProblem& p) {
  std::vector<IncentiveMechanism> out = {IncentiveMechanism::none(), IncentiveMechanism::marginal_cost()};
  if (p.all_affine()) {
    out.push_back(IncentiveMechanism::opt_bounded_toll_affine(0.4));
    out.push_back(IncentiveMechanism::opt_bounded_subsidy_affine(0.4));
  }
  return out;
}

}  // namespace

TEST(SocialOptimum, FigureMatchesBruteForce) {
  const RoutingProblem net = fig1_instance();
  const auto opt = social_optimum(net);
  ASSERT_TRUE(opt.converged);
  // Convex in (x, y): nested ternary search.
  auto best_y = [](double x) { return ternary([x](double y) { return fig1_latency(x, y); }, 0.0, 0.5); };
  const double x = ternary([&](double x) { return fig1_latency(x, best_y(x)); }, 0.0, 0.5);
  const double y = best_y(x);
  EXPECT_NEAR(opt.total_latency, fig1_latency(x, y), 1e-9);
  expect_flows(edges_of(opt), {x, 0.5 - x, y, 0.5 - y, 0.5 - x + y}, 1e-5);
  // Reference values quoted to three decimals.
  EXPECT_NEAR(opt.total_latency, 0.683, 0.005);
  expect_flows(edges_of(opt), {0.289, 0.211, 0.25, 0.25, 0.461}, 1e-3);
}

TEST(SocialOptimum, Pigou) {
  const auto p1 = social_optimum(pigou_instance(1));
  EXPECT_NEAR(p1.edge_flows[0], 0.5, 1e-6);
  EXPECT_NEAR(p1.total_latency, 0.75, 1e-9);
  for (int p = 1; p <= 4; ++p) {
    const auto r = social_optimum(pigou_instance(p));
    EXPECT_NEAR(r.edge_flows[0], std::pow(p + 1.0, -1.0 / p), 1e-6) << p;
  }
}

TEST(NashHomogeneous, FigureUntolled) {
  const RoutingProblem net = fig1_instance();
  const auto r = nash_flow_homogeneous(net, IncentiveMechanism::none());
  ASSERT_TRUE(r.converged);
  expect_flows(edges_of(r), {0.5, 0, 0, 0.5, 0}, 1e-6);
  EXPECT_NEAR(r.total_latency, 1.0, 1e-9);
}

TEST(NashHomogeneous, MarginalCostRecoversOptimum) {
  const RoutingProblem net = fig1_instance();
  const auto r = nash_flow_homogeneous(net, IncentiveMechanism::marginal_cost());
  const auto opt = social_optimum(net);
  expect_flows(edges_of(r), edges_of(opt), 1e-3);
}

TEST(NashHomogeneous, PigouUntolled) {
  for (int p = 1; p <= 4; ++p) {
    const auto r = nash_flow_homogeneous(pigou_instance(p), IncentiveMechanism::none());
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.edge_flows[0], 1.0, 1e-7);
    EXPECT_LE(r.residual, 1e-7);
  }
}

TEST(NashHeterogeneous, UnitSensitivityMatchesHomogeneous) {
  for (const auto& c : full_test_corpus()) {
    for (const auto& m : corpus_mechanisms(c.problem)) {
      const auto hom = nash_flow_homogeneous(c.problem, m);
      const auto het = nash_flow_heterogeneous(c.problem, m, SensitivityProfile::homogeneous(c.problem.num_od()));
      expect_flows(edges_of(het), edges_of(hom), 1e-6);
    }
  }
}

TEST(NashHeterogeneous, FigureMarginalCostExample) {
  const RoutingProblem net = fig1_instance();
  const auto r =
      nash_flow_heterogeneous(net, IncentiveMechanism::marginal_cost(), SensitivityProfile::per_od_constant({2, 0.5}));
  ASSERT_TRUE(r.converged);
  expect_flows(edges_of(r), {0.224, 0.276, 0.167, 0.333, 0.443}, 0.01);
  // Constant edges carry no toll, so both alternatives cost 1:
  // OD1 4f1^2 + 2 * 8f1^2 = 1, OD2 2f4 + (1/2) 2f4 = 1.
  EXPECT_NEAR(r.edge_flows[0], 1.0 / std::sqrt(20.0), 1e-6);
  EXPECT_NEAR(r.edge_flows[3], 1.0 / 3.0, 1e-6);
}

TEST(VerifyEquilibrium, Examples) {
  const RoutingProblem net = fig1_instance();
  const auto mc = IncentiveMechanism::marginal_cost();
  const auto opt = social_optimum(net);
  EXPECT_TRUE(verify_equilibrium(net, mc, opt.flow, 1e-6).ok);

  const auto untolled = nash_flow_homogeneous(net, IncentiveMechanism::none());
  const auto chk = verify_equilibrium(net, mc, untolled.flow, 1e-6);
  EXPECT_FALSE(chk.ok);
  EXPECT_EQ(chk.od, 0u);
  // OD1 on e1 pays 1 + 2 = 3 under the toll; {e2, e5} costs 1.
  EXPECT_NEAR(chk.gap, 2.0, 1e-9);

  EXPECT_TRUE(verify_equilibrium(net, mc, untolled.flow, std::numeric_limits<double>::infinity()).ok);
}

TEST(WorstNash, Examples) {
  const auto p = worst_nash_latency(pigou_instance(1), IncentiveMechanism::none(), 1.0, 1.0);
  EXPECT_NEAR(p.latency, 1.0, 1e-9);
  EXPECT_TRUE(p.lower_bound);
  const auto f = worst_nash_latency(fig1_instance(), IncentiveMechanism::none(), 1.0, 1.0);
  EXPECT_NEAR(f.latency, 1.0, 1e-9);
  EXPECT_FALSE(f.approximate);
}

TEST(WorstNash, JobsDoNotChangeResult) {
  SolverConfig one;
  one.profile_grid = 11;
  SolverConfig many = one;
  many.jobs = 4;
  const auto mech = IncentiveMechanism::marginal_cost();
  const auto a = worst_nash_latency(fig1_instance(), mech, 0.5, 2.0, one);
  const auto b = worst_nash_latency(fig1_instance(), mech, 0.5, 2.0, many);
  EXPECT_EQ(a.latency, b.latency);
  EXPECT_EQ(a.worst.edge_flows, b.worst.edge_flows);
  EXPECT_EQ(a.solves, b.solves);
}

TEST(Solver, DeterministicGivenSeed) {
  SolverConfig c;
  c.seed = 42;
  const RoutingProblem net = fig1_instance();
  const auto mech = IncentiveMechanism::marginal_cost();
  const auto tau = mech.incentive_polys(net);
  const auto classes = classes_from_profile(net, SensitivityProfile::two_point(0.5, 2.0, {0.3, 0.7}));
  for (std::size_t r = 0; r < 4; ++r) {
    const auto a = solve_equilibrium(net, tau, classes, c, r);
    const auto b = solve_equilibrium(net, tau, classes, c, r);
    EXPECT_EQ(a.edge_flows, b.edge_flows);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

TEST(Solver, HarmonicRuleReachesLooseTolerance) {
  SolverConfig c;
  c.step = StepRule::kHarmonic;
  c.epsilon = 1e-3;
  c.restarts = 1;
  const auto r = nash_flow_homogeneous(pigou_instance(1), IncentiveMechanism::none(), c);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.edge_flows[0], 1.0, 1e-2);
}

TEST(Solver, IterationCapReportsNonConvergence) {
  SolverConfig c;
  c.max_iterations = 1;
  c.restarts = 1;
  c.step = StepRule::kHarmonic;
  const auto r = nash_flow_heterogeneous(fig1_instance(), IncentiveMechanism::marginal_cost(),
                                         SensitivityProfile::per_od_constant({2, 0.5}), c);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.residual, c.epsilon);
  EXPECT_THROW(social_optimum(fig1_instance(), c), ConvergenceError);
}

// Invariants over the full corpus.

TEST(CorpusInvariants, ConvergedFlowsVerifyAndOptimumIsLowest) {
  for (const auto& c : full_test_corpus()) {
    const auto opt = social_optimum(c.problem);
    for (const auto& m : corpus_mechanisms(c.problem)) {
      for (const auto& prof : {SensitivityProfile::homogeneous(c.problem.num_od()),
                               SensitivityProfile::two_point(0.5, 1.5, std::vector<double>(c.problem.num_od(), 0.5))}) {
        SolverConfig cfg;
        const auto tau = m.incentive_polys(c.problem);
        const auto classes = classes_from_profile(c.problem, prof);
        for (std::size_t r = 0; r < 3; ++r) {
          const auto res = solve_equilibrium(c.problem, tau, classes, cfg, r);
          ASSERT_TRUE(res.converged) << c.id << " " << m.describe();
          EXPECT_LE(res.residual, cfg.epsilon);
          EXPECT_TRUE(verify_equilibrium(c.problem, tau, res.flow, cfg.epsilon).ok) << c.id << " " << m.describe();
          EXPECT_NO_THROW(check_feasible(c.problem, res.flow));
          EXPECT_LE(opt.total_latency, res.total_latency * (1 + 1e-9) + 1e-12) << c.id;
        }
      }
    }
  }
}

TEST(CorpusInvariants, NominalEquivalenceKeepsEquilibria) {
  const SolverConfig cfg;
  for (const auto& c : full_test_corpus()) {
    for (const auto& m : corpus_mechanisms(c.problem)) {
      const auto res = nash_flow_homogeneous(c.problem, m, cfg);
      ASSERT_TRUE(res.converged) << c.id;
      for (double lam : {0.5, 2.0}) {
        const auto tl = IncentiveMechanism::nominal_equivalent(m, lam);
        EXPECT_TRUE(verify_equilibrium(c.problem, tl, res.flow, lam * cfg.epsilon).ok)
            << c.id << " " << m.describe() << " lambda " << lam;
      }
      for (double lam : {0.1, 0.5, 2.0, 10.0}) {
        const auto tl = IncentiveMechanism::nominal_equivalent(m, lam);
        EXPECT_TRUE(verify_equilibrium(c.problem, tl, res.flow, cfg.epsilon).ok)
            << c.id << " " << m.describe() << " lambda " << lam;
      }
    }
  }
}

TEST(CorpusInvariants, PushforwardKeepsHeterogeneousEquilibria) {
  const SolverConfig cfg;
  for (const auto& c : full_test_corpus()) {
    const auto prof = SensitivityProfile::two_point(0.5, 1.5, std::vector<double>(c.problem.num_od(), 0.5));
    for (const auto& m : corpus_mechanisms(c.problem)) {
      const auto res = nash_flow_heterogeneous(c.problem, m, prof, cfg);
      ASSERT_TRUE(res.converged) << c.id;
      for (double lam : {0.5, 2.0}) {
        std::vector<double> s;
        double factor = 0.0;
        for (const auto& cls : res.flow.classes) {
          s.push_back(sensitivity_transform(cls.sensitivity, lam));
          factor = std::max(factor, lam / (lam + cls.sensitivity - cls.sensitivity * lam));
        }
        const auto moved = with_sensitivities(res.flow, s);
        const auto tl = IncentiveMechanism::nominal_equivalent(m, lam);
        EXPECT_TRUE(verify_equilibrium(c.problem, tl, moved, factor * cfg.epsilon).ok)
            << c.id << " " << m.describe() << " lambda " << lam;
        // The pushed-forward profile is itself valid.
        EXPECT_NO_THROW(sensitivity_pushforward(prof, lam));
      }
    }
  }
}

TEST(ClassesFromProfile, MassesSplitByFraction) {
  const auto net = fig1_instance();
  const auto cls = classes_from_profile(net, SensitivityProfile::two_point(0.5, 2.0, {0.2, 1.0}));
  double m0 = 0, m1 = 0;
  for (const auto& c : cls) (c.od == 0 ? m0 : m1) += c.mass;
  EXPECT_NEAR(m0, 0.5, 1e-15);
  EXPECT_NEAR(m1, 0.5, 1e-15);
  EXPECT_THROW(classes_from_profile(net, SensitivityProfile::homogeneous(3)), std::invalid_argument);
}
