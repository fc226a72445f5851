#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "congestion/poa.h"

using namespace congestion;

namespace {

// Untolled-style closed form for l1 = f, l2 = 1 with an affine toll k f on
// edge 1: Nash puts min(r, 1/(1+k)) on edge 1, the optimum min(r, 1/2).
double pigou_toll_ratio(double k, double r) {
  auto L = [r](double f) { return f * f + (r - f); };
  return L(std::min(r, 1.0 / (1.0 + k))) / L(std::min(r, 0.5));
}

// Same network with the constant edge subsidised to 1 - c.
double pigou_subsidy_ratio(double c, double r) {
  auto L = [r](double f) { return f * f + (r - f); };
  return L(std::min(r, 1.0 - c)) / L(std::min(r, 0.5));
}

SolverConfig light_config() {
  SolverConfig c;
  c.profile_grid = 21;
  c.restarts = 4;
  c.jobs = 0;
  return c;
}

}  // namespace

TEST(Prop1, TollEvaluator) {
  EXPECT_DOUBLE_EQ(poa_bound_prop1_toll(0.0), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(poa_bound_prop1_toll(1.0), 1.0);
  EXPECT_NEAR(poa_bound_prop1_toll(0.5), 4.0 / 3.75, 1e-15);
  EXPECT_DOUBLE_EQ(poa_bound_prop1_toll(7.0), 1.0);
}

TEST(Prop1, SubsidyEvaluator) {
  EXPECT_DOUBLE_EQ(poa_bound_prop1_subsidy(0.0), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(poa_bound_prop1_subsidy(0.5), 1.0);
  EXPECT_NEAR(poa_bound_prop1_subsidy(1.0 / 3.0), 4.0 / 3.75, 1e-12);
  EXPECT_THROW(poa_bound_prop1_subsidy(-0.1), std::invalid_argument);
}

TEST(Prop1, MatchesPigouSupremumOverDemand) {
  // The sup over demand of the closed-form Pigou ratio is the bound.
  for (double beta : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    const auto sup = [](const std::function<double(double)>& g) {
      // Coarse scan, then golden-section refinement around the best point.
      double best_r = 0.0, best = 0.0;
      for (int i = 1; i <= 2000; ++i) {
        const double r = 2.0 * i / 2000.0;
        if (g(r) > best) best = g(best_r = r);
      }
      double lo = best_r - 1e-3, hi = best_r + 1e-3;
      for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (g(m1) < g(m2)) lo = m1;
        else hi = m2;
      }
      return std::max(best, g(0.5 * (lo + hi)));
    };
    const double toll = sup([&](double r) { return pigou_toll_ratio(std::min(beta, 1.0), r); });
    const double sub = sup([&](double r) { return pigou_subsidy_ratio(std::min(beta, 0.5), r); });
    EXPECT_NEAR(poa_bound_prop1_toll(beta), toll, 1e-6) << beta;
    EXPECT_NEAR(poa_bound_prop1_subsidy(beta), sub, 1e-6) << beta;
  }
}

TEST(Prop1, SolverAgreesWithClosedFormPigou) {
  const SensitivityProfile hom = SensitivityProfile::homogeneous(1);
  for (double beta : {0.1, 0.3, 0.7}) {
    for (double r : {0.4, 0.6, 0.8, 1.0, 1.5}) {
      const auto net = pigou_instance(1, r);
      const auto t = poa_instance(net, IncentiveMechanism::opt_bounded_toll_affine(beta), hom);
      const auto s = poa_instance(net, IncentiveMechanism::opt_bounded_subsidy_affine(beta), hom);
      EXPECT_NEAR(t.ratio, pigou_toll_ratio(beta, r), 1e-7);
      EXPECT_NEAR(s.ratio, pigou_subsidy_ratio(std::min(beta, 0.5), r), 1e-7);
    }
  }
}

TEST(Prop2, SmcEvaluator) {
  EXPECT_NEAR(poa_bound_prop2_smc(1.0), 1.0, 1e-15);
  EXPECT_NEAR(poa_bound_prop2_smc(1e-14), 4.0 / 3.0, 1e-6);
  EXPECT_NEAR(poa_bound_prop2_smc(0.25), 4.0 / 3.0 * (1 - 0.5 / 2.25), 1e-15);
  EXPECT_THROW(poa_bound_prop2_smc(0.0), std::invalid_argument);
  EXPECT_THROW(poa_bound_prop2_smc(1.5), std::invalid_argument);
}

TEST(Prop2, NesEvaluator) {
  EXPECT_NEAR(poa_bound_prop2_nes(2.0, 2.0), 1.0, 1e-12);
  EXPECT_NEAR(prop2_nes_q(0.5, 2.0), 1.0 / 7.0, 1e-15);
  const double q7 = std::sqrt(1.0 / 7.0);
  EXPECT_NEAR(poa_bound_prop2_nes(0.5, 2.0), 4.0 / 3.0 * (1 - q7 / ((1 + q7) * (1 + q7))), 1e-12);
  for (double lo : {0.1, 0.3, 0.5, 0.9}) {
    for (double hi : {1.0, 1.5, 4.0}) {
      EXPECT_GT(poa_bound_prop2_nes(lo, hi), poa_bound_prop2_smc(lo / hi)) << lo << " " << hi;
      EXPECT_LT(prop2_nes_q(lo, hi), lo / hi);
    }
  }
}

TEST(Prop3, Evaluator) {
  EXPECT_NEAR(poa_bound_prop3(1.0, 1.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(poa_bound_prop3(1e-12, 0.5, 2.0), 4.0 / 3.0, 1e-9);
  for (double su : {1.5, 2.0, 4.0}) {
    const double sl = 1.0 / su;
    EXPECT_NEAR(poa_bound_prop3(1.0 / su, sl, su), 4.0 / 3.0 * (1 - sl * sl / ((1 + sl * sl) * (1 + sl * sl))), 1e-12);
  }
  EXPECT_THROW(poa_bound_prop3(0.0, 1, 1), std::invalid_argument);
}

TEST(Prop4, Evaluator) {
  EXPECT_NEAR(poa_bound_prop4(1e-12, 0.5, 2.0), 4.0 / 3.0, 1e-9);
  for (double b : {0.5, 0.7, 3.0}) EXPECT_NEAR(poa_bound_prop4(b, 1.0, 1.0), 1.0, 1e-15);
  for (double su : {1.5, 2.0, 4.0}) {
    EXPECT_NEAR(poa_bound_prop4(1.0 / su, 1.0 / su, su), poa_bound_prop3(1.0 / su, 1.0 / su, su), 1e-9);
  }
}

TEST(Evaluators, RangeAndContinuity) {
  const double lo43 = 1.0 - 1e-12, hi43 = 4.0 / 3.0 + 1e-12;
  for (int i = 0; i <= 400; ++i) {
    const double b = 2.0 * i / 400.0;
    EXPECT_GE(poa_bound_prop1_toll(b), lo43);
    EXPECT_LE(poa_bound_prop1_toll(b), hi43);
    EXPECT_GE(poa_bound_prop1_subsidy(b), lo43);
    EXPECT_LE(poa_bound_prop1_subsidy(b), hi43);
    if (b == 0.0) continue;
    for (auto [sl, su] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}, std::pair{0.25, 1.0}, std::pair{1.0, 9.0}}) {
      for (double v : {poa_bound_prop3(b, sl, su), poa_bound_prop4(b, sl, su)}) {
        EXPECT_GE(v, lo43);
        EXPECT_LE(v, hi43);
      }
    }
  }
  for (int i = 1; i <= 100; ++i) {
    const double q = i / 100.0;
    EXPECT_GE(poa_bound_prop2_smc(q), lo43);
    EXPECT_LE(poa_bound_prop2_smc(q), hi43);
  }
  // Breakpoints.
  const double d = 1e-12;
  EXPECT_NEAR(poa_bound_prop1_toll(1 - d), poa_bound_prop1_toll(1), 1e-9);
  EXPECT_NEAR(poa_bound_prop1_subsidy(0.5 - d), poa_bound_prop1_subsidy(0.5), 1e-9);
  for (auto [sl, su] : {std::pair{0.5, 2.0}, std::pair{0.25, 1.0}, std::pair{1.0, 9.0}}) {
    const double b3 = 1.0 / std::sqrt(sl * su), b4 = 1.0 / (sl + su);
    EXPECT_NEAR(poa_bound_prop3(b3 - d, sl, su), poa_bound_prop3(b3, sl, su), 1e-9);
    EXPECT_NEAR(poa_bound_prop4(b4 - d, sl, su), poa_bound_prop4(b4, sl, su), 1e-9);
  }
}

TEST(Thm5, Crossover) {
  EXPECT_DOUBLE_EQ(thm5_crossover(1, 1).beta_star, 1.0);
  EXPECT_DOUBLE_EQ(thm5_crossover(0.5, 2).beta_star, 0.5);
  for (double su : {1.5, 2.0, 4.0}) {
    const auto c = thm5_crossover(1 / su, su);
    EXPECT_NEAR(poa_bound_prop3(c.beta_star, 1 / su, su), poa_bound_prop4(c.beta_star, 1 / su, su), 1e-9);
  }
  // Unnormalised inputs are rescaled to s_L s_U = 1.
  const auto c = thm5_crossover(1.0, 4.0);
  EXPECT_NEAR(c.scale, 0.5, 1e-15);
  EXPECT_NEAR(c.s_low_normalized * c.s_high_normalized, 1.0, 1e-12);
  EXPECT_NEAR(c.beta_star, 0.25, 1e-12);
}

TEST(PigouInstance, Properties) {
  const auto hom = SensitivityProfile::homogeneous(1);
  EXPECT_NEAR(poa_instance(pigou_instance(1), IncentiveMechanism::none(), hom).ratio, 4.0 / 3.0, 1e-9);
  const auto p2 = poa_instance(pigou_instance(2), IncentiveMechanism::none(), hom);
  const double f = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(p2.l_nash, 1.0, 1e-9);
  EXPECT_NEAR(p2.l_opt, f * f * f + 1 - f, 1e-9);
  for (int p = 1; p <= 4; ++p) {
    EXPECT_NEAR(poa_instance(pigou_instance(p), IncentiveMechanism::marginal_cost(), hom).ratio, 1.0, 1e-3);
  }
  EXPECT_THROW(pigou_instance(0), std::invalid_argument);
}

TEST(ParallelAffineInstance, Examples) {
  const auto pig = parallel_affine_instance({1, 0}, {0, 1}, 1.0);
  EXPECT_FALSE(pig.fully_utilized);
  EXPECT_NEAR(pig.nash.edge_flows[0], 1.0, 1e-7);
  const auto sym = parallel_affine_instance({1, 1}, {0, 0}, 1.0);
  EXPECT_TRUE(sym.fully_utilized);
  EXPECT_NEAR(sym.nash.edge_flows[0], 0.5, 1e-7);
  const auto two = parallel_affine_instance({1, 0}, {0, 1}, 2.0);
  EXPECT_TRUE(two.fully_utilized);
  EXPECT_NEAR(two.nash.edge_flows[0], 1.0, 1e-7);
  EXPECT_NEAR(two.nash.edge_flows[1], 1.0, 1e-7);
  EXPECT_THROW(parallel_affine_instance({}, {}, 1.0), std::invalid_argument);
}

TEST(Corpus, Composition) {
  const auto corpus = parallel_affine_corpus();
  ASSERT_EQ(corpus.size(), 25u);
  std::set<std::string> ids;
  const std::set<double> allowed = {0.0, 0.5, 1.0, 2.0};
  for (const auto& c : corpus) {
    ids.insert(c.id);
    EXPECT_TRUE(c.problem.is_parallel());
    for (const auto& e : c.problem.edges()) {
      EXPECT_TRUE(allowed.count(e.latency.slope()));
      EXPECT_TRUE(allowed.count(e.latency.intercept()));
    }
    const auto nash = nash_flow_homogeneous(c.problem, IncentiveMechanism::none());
    for (double f : nash.edge_flows) EXPECT_GT(f, 1e-9) << c.id;
  }
  EXPECT_EQ(ids.size(), 25u);
  EXPECT_EQ(full_test_corpus().size(), 29u);
}

TEST(PoaInstance, PaperExamples) {
  const auto net = fig1_instance();
  EXPECT_NEAR(poa_instance(net, IncentiveMechanism::none(), SensitivityProfile::homogeneous(2)).ratio, 1.465, 0.01);
  EXPECT_NEAR(
      poa_instance(net, IncentiveMechanism::marginal_cost(), SensitivityProfile::per_od_constant({2, 0.5})).ratio,
      1.04, 0.01);
}

TEST(PoaInstance, ZeroOptimumRejected) {
  ProblemSpec s;
  s.vertices = {"o", "d"};
  s.edges = {{"e1", "o", "d", LatencyFunction::affine(0, 0)}};
  s.od = {{"o", "d", 1.0}};
  EXPECT_THROW(poa_instance(build_problem(s), IncentiveMechanism::none(), SensitivityProfile::homogeneous(1)),
               std::invalid_argument);
}

TEST(PoaInstance, ReportInvariants) {
  for (const auto& c : full_test_corpus()) {
    const auto r = poa_instance(c.problem, IncentiveMechanism::marginal_cost(), SensitivityBounds{0.5, 2.0},
                                light_config(), 4.0 / 3.0);
    EXPECT_GE(r.ratio, 1.0 - 1e-6) << c.id;
    EXPECT_EQ(r.within_bound, r.ratio <= 4.0 / 3.0 + 1e-6);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.worst_profile.has_value());
  }
}

TEST(Properties, SubsidyDominatesTollEmpirically) {
  const auto hom = SensitivityProfile::homogeneous(1);
  for (double beta : {0.1, 0.25, 0.4, 0.6, 0.9}) {
    for (const auto& c : full_test_corpus()) {
      if (!c.problem.all_affine()) continue;
      const auto prof = SensitivityProfile::homogeneous(c.problem.num_od());
      const double t = poa_instance(c.problem, IncentiveMechanism::opt_bounded_toll_affine(beta), prof).ratio;
      const double s = poa_instance(c.problem, IncentiveMechanism::opt_bounded_subsidy_affine(beta), prof).ratio;
      EXPECT_LE(s, t + 1e-3) << c.id << " beta " << beta;
      EXPECT_LE(t, poa_bound_prop1_toll(beta) + 1e-6) << c.id;
      EXPECT_LE(s, poa_bound_prop1_subsidy(beta) + 1e-6) << c.id;
    }
  }
  (void)hom;
}

TEST(Properties, RobustBoundsHoldOnCorpus) {
  const SolverConfig cfg = light_config();
  for (double beta : {0.2, 0.6}) {
    for (auto [sl, su] : {std::pair{0.5, 2.0}, std::pair{1.0 / 3.0, 3.0}}) {
      const auto kt = opt_robust_toll_coeffs(beta, sl, su);
      const auto ks = opt_robust_subsidy_coeffs(beta, sl, su);
      for (const auto& c : parallel_affine_corpus()) {
        const double t =
            poa_instance(c.problem, IncentiveMechanism::affine(kt.k1, kt.k2), SensitivityBounds{sl, su}, cfg).ratio;
        const double s =
            poa_instance(c.problem, IncentiveMechanism::affine(ks.k1, ks.k2), SensitivityBounds{sl, su}, cfg).ratio;
        EXPECT_LE(t, poa_bound_prop3(beta, sl, su) + 1e-3) << c.id;
        EXPECT_LE(s, poa_bound_prop4(beta, sl, su) + 1e-3) << c.id;
      }
    }
  }
}

TEST(Properties, ScaledTollBoundsHoldOnCorpus) {
  const SolverConfig cfg = light_config();
  for (double q : {0.5, 0.25}) {
    const auto smc = IncentiveMechanism::scaled_marginal_cost(q, 1.0);
    const auto nes = IncentiveMechanism::nominal_equivalent(smc, 1.0 / (1.0 + 1.0 / std::sqrt(q)));
    for (const auto& c : parallel_affine_corpus()) {
      EXPECT_LE(poa_instance(c.problem, smc, SensitivityBounds{q, 1.0}, cfg).ratio, poa_bound_prop2_smc(q) + 1e-3)
          << c.id;
      // The subsidy on [q, 1] behaves like the same toll on [qhat, 1].
      const double qhat = prop2_nes_q(q, 1.0);
      EXPECT_NEAR(poa_instance(c.problem, nes, SensitivityBounds{q, 1.0}, cfg).ratio,
                  poa_instance(c.problem, smc, SensitivityBounds{qhat, 1.0}, cfg).ratio, 1e-6)
          << c.id;
    }
  }
}

TEST(Properties, SubsidyFormulaIsNotAnUpperBoundEverywhere) {
  // The subsidy formula is the scaled toll bound at qhat, which assumes the
  // toll coefficient is retuned to 1/sqrt(qhat). With the coefficient fixed
  // at 1/sqrt(q) this fully-utilized instance exceeds it.
  const double q = 0.5;
  const auto smc = IncentiveMechanism::scaled_marginal_cost(q, 1.0);
  const auto nes = IncentiveMechanism::nominal_equivalent(smc, 1.0 / (1.0 + 1.0 / std::sqrt(q)));
  const auto inst = parallel_affine_instance({0, 2, 2}, {1, 0, 0.5}, 1.0);
  ASSERT_TRUE(inst.fully_utilized);
  const auto r = poa_instance(inst.problem, nes, SensitivityBounds{q, 1.0});
  // Hand check: 42% of the mass at s = 1 all on e1, the rest equalises
  // costs at 1 / sqrt(2); optimum (0.625, 0.25, 0.125) with L = 0.84375.
  EXPECT_NEAR(r.l_opt, 0.84375, 1e-9);
  EXPECT_NEAR(r.ratio, 1.031773, 1e-5);
  EXPECT_GT(r.ratio, poa_bound_prop2_nes(q, 1.0) + 1e-3);
  EXPECT_LE(poa_instance(inst.problem, smc, SensitivityBounds{q, 1.0}).ratio, poa_bound_prop2_smc(q) + 1e-6);
}

TEST(Properties, NominalScalingMitigatesHeterogeneity) {
  const SolverConfig cfg = light_config();
  for (int p : {1, 2}) {
    double prev = INFINITY;
    for (double lam : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto m = IncentiveMechanism::nominal_equivalent(IncentiveMechanism::marginal_cost(), lam);
      const double r = poa_instance(pigou_instance(p), m, SensitivityBounds{1.0, 4.0}, cfg).ratio;
      EXPECT_LE(r, prev + 1e-3) << "p " << p << " lambda " << lam;
      prev = r;
    }
    EXPECT_LE(prev, 1.02);
  }
}

TEST(Sweep, Presets) {
  for (const auto& name : preset_names()) EXPECT_EQ(preset_spec(name).grid.size(), 101u);
  EXPECT_THROW(preset_spec("fig9"), std::invalid_argument);
  auto spec = preset_spec("fig3");
  spec.grid = {};
  EXPECT_THROW(sweep(spec), std::invalid_argument);
  spec.grid = {0.3};
  EXPECT_EQ(sweep(spec).samples.size(), 1u);
}

TEST(Sweep, BoundedCurveSubsidyBelowToll) {
  const auto curve = sweep(preset_spec("fig3"));
  for (const auto& s : curve.samples) EXPECT_LE(s.subsidy_bound, s.toll_bound + 1e-15) << s.param;
}

TEST(Sweep, ScaledCurveSubsidyAboveToll) {
  const auto curve = sweep(preset_spec("fig4"));
  for (const auto& s : curve.samples) {
    if (s.param > 1.0) EXPECT_GT(s.subsidy_bound, s.toll_bound) << s.param;
    else EXPECT_NEAR(s.subsidy_bound, s.toll_bound, 1e-12);
  }
}

TEST(Sweep, RobustCurvesCrossAtInverseBeta) {
  // beta = 0.4 and s_L s_U = 1 put the crossing at s_U = 2.5, ratio 6.25.
  auto spec = preset_spec("fig5");
  spec.grid = linspace(1.0, 16.0, 301);
  const auto curve = sweep(spec);
  for (const auto& s : curve.samples) {
    if (s.param < 6.25 - 1e-9) EXPECT_LT(s.subsidy_bound, s.toll_bound) << s.param;
    if (s.param > 6.25 + 1e-9) EXPECT_LT(s.toll_bound, s.subsidy_bound) << s.param;
  }
}

TEST(Sweep, CsvIsDeterministic) {
  auto spec = preset_spec("fig5", 6);
  spec.empirical = true;
  SolverConfig one = light_config();
  one.jobs = 1;
  SolverConfig many = one;
  many.jobs = 4;
  std::ostringstream a, b;
  write_csv(a, sweep(spec, one));
  write_csv(b, sweep(spec, many));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "param,toll_bound,subsidy_bound,empirical_toll,empirical_subsidy,instance_id");
  std::ostringstream c;
  write_csv(c, sweep(preset_spec("fig3", 3)));
  EXPECT_NE(c.str().find("\n0,1.33333333,1.33333333,,,\n"), std::string::npos) << c.str();
}

TEST(Properties, NoAgnosticSubsidyFixesBothPigouVariants) {
  // l1 = f with l2 = f + 1 and with l2 halved.
  auto make = [](double scale) {
    ProblemSpec s;
    s.vertices = {"o", "d"};
    s.edges = {{"e1", "o", "d", LatencyFunction::affine(1, 0)},
               {"e2", "o", "d", LatencyFunction::affine(scale, scale)}};
    s.od = {{"o", "d", 1.0}};
    return build_problem(s);
  };
  const auto full = make(1.0), half = make(0.5);
  const SolverConfig cfg = light_config();
  for (double k2 : linspace(-5.0, 0.0, 101)) {
    const auto m = IncentiveMechanism::affine(0.0, k2);
    const double a = poa_instance(full, m, SensitivityBounds{1.0, 4.0}, cfg).ratio;
    const double b = poa_instance(half, m, SensitivityBounds{1.0, 4.0}, cfg).ratio;
    EXPECT_GT(std::max(a, b), 1.001) << k2;
  }
}
