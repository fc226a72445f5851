#include "congestion/cli.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "congestion/atomic.h"
#include "congestion/io.h"
#include "congestion/poa.h"
#include "congestion/verify.h"

namespace congestion {

namespace {

struct SolverOpts {
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  std::size_t restarts = 8;
  double epsilon = 1e-7;
  std::size_t max_iterations = 100000;
  std::string step = "newton";
  std::size_t profile_grid = 51;
};

void add_solver_options(CLI::App* app, SolverOpts& o) {
  app->add_option("--seed", o.seed, "Seed for randomized restarts (CG_SEED overrides)");
  app->add_option("--jobs", o.jobs, "Worker threads, 0 = logical cores");
  app->add_option("--restarts", o.restarts, "Solver restarts per equilibrium");
  app->add_option("--epsilon", o.epsilon, "Path-cost tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iterations", o.max_iterations, "Iteration cap per solve");
  app->add_option("--step", o.step, "newton or harmonic")->check(CLI::IsMember({"newton", "harmonic"}));
  app->add_option("--profile-grid", o.profile_grid, "Mass-split grid points for worst-case profiles");
}

std::uint64_t parse_seed(const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos, 10);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (text.empty() || pos != text.size() || text[0] == '-') {
    throw std::invalid_argument("CG_SEED must be a nonnegative integer, got '" + text + "'");
  }
  return v;
}

SolverConfig make_config(const SolverOpts& o) {
  SolverConfig c;
  c.seed = o.seed;
  if (const char* env = std::getenv("CG_SEED")) c.seed = parse_seed(env);
  c.jobs = o.jobs;
  c.restarts = std::max<std::size_t>(o.restarts, 1);
  c.epsilon = o.epsilon;
  c.max_iterations = o.max_iterations;
  c.step = o.step == "harmonic" ? StepRule::kHarmonic : StepRule::kNewton;
  c.profile_grid = std::max<std::size_t>(o.profile_grid, 2);
  return c;
}

// Writes to the named file, or to `fallback` when the name is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw std::invalid_argument("cannot write '" + path + "'");
    os_ = file_.get();
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

Json json_arg(const std::string& text) {
  if (!text.empty() && text[0] == '@') return read_json_file(text.substr(1));
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& ex) {
    throw std::invalid_argument(std::string("invalid JSON argument: ") + ex.what());
  }
}

RoutingProblem builtin_instance(const std::string& name) {
  if (name == "fig1") return fig1_instance();
  if (name.rfind("pigou-p", 0) == 0) {
    const std::string deg = name.substr(7);
    if (!deg.empty() && deg.find_first_not_of("0123456789") == std::string::npos) {
      return pigou_instance(std::stoi(deg));
    }
  }
  if (name == robust_witness_instance().name()) return robust_witness_instance();
  for (auto& c : full_test_corpus()) {
    if (c.id == name) return c.problem;
  }
  throw std::invalid_argument("unknown builtin instance '" + name + "'");
}

struct MechanismOpts {
  std::string kind = "none";
  std::string base = "mc";
  double beta = NAN, lambda = NAN, k1 = 0.0, k2 = 0.0;
};

struct SensOpts {
  double s_low = 1.0, s_high = 1.0;
  std::vector<double> per_od;
  std::string profile;
};

double need(double v, const char* flag, const std::string& kind) {
  if (std::isnan(v)) throw std::invalid_argument("mechanism '" + kind + "' needs " + flag);
  return v;
}

IncentiveMechanism build_mechanism(const std::string& kind, const MechanismOpts& m, const SensOpts& s) {
  if (!kind.empty() && (kind[0] == '{' || kind[0] == '@')) return mechanism_from_json(json_arg(kind));
  if (kind == "none") return IncentiveMechanism::none();
  if (kind == "mc") return IncentiveMechanism::marginal_cost();
  if (kind == "smc") return IncentiveMechanism::scaled_marginal_cost(s.s_low, s.s_high);
  if (kind == "affine") return IncentiveMechanism::affine(m.k1, m.k2);
  if (kind == "opt-toll") return IncentiveMechanism::opt_bounded_toll_affine(need(m.beta, "--beta", kind));
  if (kind == "opt-subsidy") return IncentiveMechanism::opt_bounded_subsidy_affine(need(m.beta, "--beta", kind));
  if (kind == "robust-toll" || kind == "robust-subsidy") {
    const double b = need(m.beta, "--beta", kind);
    const AffineCoeffs k = kind == "robust-toll" ? opt_robust_toll_coeffs(b, s.s_low, s.s_high)
                                                 : opt_robust_subsidy_coeffs(b, s.s_low, s.s_high);
    return IncentiveMechanism::affine(k.k1, k.k2);
  }
  if (kind == "nominal") {
    if (m.base == "nominal") throw std::invalid_argument("use a JSON mechanism to nest nominal transforms");
    return IncentiveMechanism::nominal_equivalent(build_mechanism(m.base, m, s), need(m.lambda, "--lambda", kind));
  }
  throw std::invalid_argument("unknown mechanism '" + kind + "'");
}

void add_mechanism_options(CLI::App* app, MechanismOpts& m) {
  app->add_option("--mechanism", m.kind,
                  "none, mc, smc, affine, opt-toll, opt-subsidy, robust-toll, robust-subsidy, nominal, "
                  "or a JSON mechanism (inline or @file)");
  app->add_option("--base", m.base, "Base mechanism of nominal");
  app->add_option("--beta", m.beta, "Bounding factor");
  app->add_option("--lambda", m.lambda, "Nominal-equivalence factor");
  app->add_option("--k1", m.k1, "Affine mechanism slope factor");
  app->add_option("--k2", m.k2, "Affine mechanism intercept factor");
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeOpts {
  std::string instance, builtin, format = "json", output;
  double bound = NAN;
  MechanismOpts mech;
  SensOpts sens;
  SolverOpts solver;
};

int cmd_analyze(const AnalyzeOpts& o, std::ostream& out) {
  const RoutingProblem net = !o.instance.empty() ? load_problem(o.instance) : builtin_instance(o.builtin);
  const IncentiveMechanism mech = build_mechanism(o.mech.kind, o.mech, o.sens);
  const SolverConfig config = make_config(o.solver);
  std::optional<double> bound;
  if (!std::isnan(o.bound)) bound = o.bound;

  PoaReport rep;
  if (!o.sens.profile.empty()) {
    rep = poa_instance(net, mech, profile_from_json(json_arg(o.sens.profile)), config, bound);
  } else if (!o.sens.per_od.empty()) {
    if (o.sens.per_od.size() != net.num_od()) {
      throw std::invalid_argument("--od-sensitivity needs one value per OD pair (" + std::to_string(net.num_od()) +
                                  ")");
    }
    rep = poa_instance(net, mech, SensitivityProfile::per_od_constant(o.sens.per_od), config, bound);
  } else if (o.sens.s_low == o.sens.s_high) {
    rep = poa_instance(net, mech, SensitivityProfile::homogeneous(net.num_od(), o.sens.s_low), config, bound);
  } else {
    rep = poa_instance(net, mech, SensitivityBounds{o.sens.s_low, o.sens.s_high}, config, bound);
  }

  Sink sink(o.output, out);
  if (o.format == "csv") {
    *sink << "instance_id,mechanism,s_low,s_high,l_nash,l_opt,ratio,closed_form_bound,within_bound,converged\n";
    *sink << rep.instance_id << ",\"" << rep.mechanism << "\"," << fmt9(rep.s_low) << "," << fmt9(rep.s_high) << ","
          << fmt9(rep.l_nash) << "," << fmt9(rep.l_opt) << "," << fmt9(rep.ratio) << ","
          << (rep.closed_form_bound ? fmt9(*rep.closed_form_bound) : std::string{}) << ","
          << (rep.within_bound ? "true" : "false") << "," << (rep.converged ? "true" : "false") << "\n";
  } else {
    *sink << report_to_json(net, rep).dump(2) << "\n";
  }
  return rep.converged ? kExitOk : kExitNonConvergence;
}

// ---- sweep -----------------------------------------------------------------

struct SweepOpts {
  std::string preset, kind, output;
  double from = NAN, to = NAN, beta = 0.4;
  std::size_t points = 101;
  bool empirical = false;
  SolverOpts solver;
};

int cmd_sweep(const SweepOpts& o, std::ostream& out) {
  SweepSpec spec;
  if (!o.preset.empty()) {
    spec = preset_spec(o.preset, o.points);
  } else {
    if (o.kind.empty()) throw std::invalid_argument("sweep needs --preset or --kind");
    if (std::isnan(o.from) || std::isnan(o.to)) throw std::invalid_argument("--kind needs --from and --to");
    spec.name = o.kind;
    if (o.kind == "bounded") spec.kind = SweepKind::kBoundedAffine;
    else if (o.kind == "robust-scaled") spec.kind = SweepKind::kRobustScaled;
    else if (o.kind == "robust-bounded") spec.kind = SweepKind::kRobustBounded;
    else throw std::invalid_argument("unknown sweep kind '" + o.kind + "'");
    spec.grid = linspace(o.from, o.to, o.points);
  }
  if (spec.kind == SweepKind::kRobustBounded) spec.beta = o.beta;
  spec.empirical = o.empirical;
  const BoundCurve curve = sweep(spec, make_config(o.solver));
  Sink sink(o.output, out);
  write_csv(*sink, curve);
  return kExitOk;
}

// ---- atomic-lp -------------------------------------------------------------

struct AtomicOpts {
  std::string spec, sign = "toll", beta_sweep, dump_lp, output;
  int degree = -1;
  int n = 8;
  double beta = NAN;
  SolverOpts solver;
};

std::vector<double> parse_range(const std::string& text) {
  double lo = 0, hi = 0;
  std::size_t count = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || !is.eof()) {
    throw std::invalid_argument("--beta-sweep expects lo:hi:count, got '" + text + "'");
  }
  if (count == 0) throw std::invalid_argument("--beta-sweep grid is empty");
  return linspace(lo, hi, count);
}

int cmd_atomic_lp(const AtomicOpts& o, std::ostream& out) {
  AtomicSpec spec;
  if (!o.spec.empty()) {
    spec = atomic_spec_from_json(json_arg(o.spec[0] == '{' ? o.spec : "@" + o.spec));
  } else {
    if (o.degree < 0) throw std::invalid_argument("atomic-lp needs --spec or --degree");
    spec.basis = polynomial_basis(o.degree);
    if (o.n < 1) throw std::invalid_argument("--n must be >= 1");
    spec.n = o.n;
    if (!std::isnan(o.beta)) spec.beta = o.beta;
    spec.sign = sign_from_string(o.sign);
  }
  const std::size_t jobs = make_config(o.solver).jobs;

  if (!o.dump_lp.empty()) {
    Sink dump(o.dump_lp, out);
    for (const auto& b : spec.basis) {
      AtomicLp lp = build_lp(b, spec.n);
      if (spec.beta) add_budget_constraints(lp, *spec.beta, spec.sign, b);
      *dump << "// basis " << b.name() << "\n";
      dump_lp(*dump, lp.lp);
    }
  }

  if (!o.beta_sweep.empty()) {
    const std::vector<double> grid = parse_range(o.beta_sweep);
    std::vector<AtomicLpReport> toll(grid.size()), sub(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
      toll[i] = solve_atomic_lp(spec.basis, spec.n, grid[i], IncentiveSign::kToll);
      sub[i] = solve_atomic_lp(spec.basis, spec.n, grid[i], IncentiveSign::kSubsidy);
    });
    bool ok = true;
    Sink sink(o.output, out);
    *sink << "beta,toll_poa,subsidy_poa,toll_status,subsidy_status\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto status = [](const AtomicLpReport& r) {
        return !r.all_optimal ? "not-optimal" : (r.all_certified ? "certified" : "uncertified");
      };
      *sink << fmt9(grid[i]) << "," << (toll[i].all_optimal ? fmt9(toll[i].poa) : "") << ","
            << (sub[i].all_optimal ? fmt9(sub[i].poa) : "") << "," << status(toll[i]) << "," << status(sub[i])
            << "\n";
      ok = ok && toll[i].all_optimal && sub[i].all_optimal;
    }
    return ok ? kExitOk : kExitNonConvergence;
  }

  const AtomicLpReport rep = solve_atomic_lp(spec.basis, spec.n, spec.beta, spec.sign, jobs);
  Sink sink(o.output, out);
  *sink << atomic_report_to_json(rep).dump(2) << "\n";
  return rep.all_optimal ? kExitOk : kExitNonConvergence;
}

// ---- verify ----------------------------------------------------------------

struct VerifyCliOpts {
  std::string filter;
  std::vector<std::string> faults;
  SolverOpts solver;
};

int cmd_verify(const VerifyCliOpts& o, std::ostream& out) {
  VerifyOptions v;
  v.filter = o.filter;
  v.faults = o.faults;
  v.config = make_config(o.solver);
  const auto checks = run_verify(v);
  print_checks(out, checks);
  bool failed = false, nonconverged = false;
  for (const auto& c : checks) {
    failed = failed || !c.pass;
    nonconverged = nonconverged || c.nonconverged;
  }
  if (!failed) return kExitOk;
  return nonconverged ? kExitNonConvergence : kExitInput;
}

// ---- gen -------------------------------------------------------------------

struct GenOpts {
  std::string kind, output, output_dir, sign = "toll";
  int p = 1, degree = 4, n = 8;
  double demand = 1.0, rate = 1.0, beta = NAN;
  std::vector<double> a, b;
};

int cmd_gen(const GenOpts& o, std::ostream& out) {
  if (o.kind == "corpus") {
    if (o.output_dir.empty()) throw std::invalid_argument("gen --kind corpus needs --output-dir");
    std::filesystem::create_directories(o.output_dir);
    for (const auto& c : full_test_corpus()) {
      const std::string path = (std::filesystem::path(o.output_dir) / (c.id + ".cg.json")).string();
      Sink sink(path, out);
      *sink << problem_to_json(c.problem).dump(2) << "\n";
    }
    return kExitOk;
  }
  Json j;
  if (o.kind == "fig1") {
    j = problem_to_json(fig1_instance());
  } else if (o.kind == "pigou") {
    j = problem_to_json(pigou_instance(o.p, o.demand));
  } else if (o.kind == "parallel") {
    if (o.a.empty() || o.a.size() != o.b.size()) throw std::invalid_argument("--a and --b need the same nonzero length");
    j = problem_to_json(parallel_affine_instance(o.a, o.b, o.rate).problem);
  } else if (o.kind == "atomic") {
    if (o.degree < 0) throw std::invalid_argument("--degree must be >= 0");
    Json basis = Json::array();
    for (int d = 0; d <= o.degree; ++d) basis.push_back({{"kind", "monomial"}, {"degree", d}});
    j = {{"basis", basis}, {"n", o.n}, {"sign", to_string(sign_from_string(o.sign))}};
    j["beta"] = std::isnan(o.beta) ? Json(nullptr) : Json(o.beta);
  } else {
    throw std::invalid_argument("unknown generator '" + o.kind + "' (fig1, pigou, parallel, corpus, atomic)");
  }
  Sink sink(o.output, out);
  *sink << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Congestion games with tolls, subsidies and heterogeneous users", "cgames"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  AnalyzeOpts an;
  auto* analyze = app.add_subcommand("analyze", "Price of anarchy of one instance under one mechanism");
  auto* inst = analyze->add_option("--instance", an.instance, "Problem file (.cg.json)");
  auto* bi = analyze->add_option("--builtin", an.builtin, "Built-in instance: fig1, pigou-pN, corpus ids");
  inst->excludes(bi);
  add_mechanism_options(analyze, an.mech);
  analyze->add_option("--s-low", an.sens.s_low, "Lowest sensitivity");
  analyze->add_option("--s-high", an.sens.s_high, "Highest sensitivity");
  analyze->add_option("--od-sensitivity", an.sens.per_od, "One sensitivity per OD pair")->delimiter(',');
  analyze->add_option("--profile", an.sens.profile, "Sensitivity profile JSON (inline or @file)");
  analyze->add_option("--bound", an.bound, "Closed-form bound to compare against");
  analyze->add_option("--format", an.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  analyze->add_option("--output", an.output, "Output file (default stdout)");
  add_solver_options(analyze, an.solver);

  SweepOpts sw;
  auto* swc = app.add_subcommand("sweep", "Closed-form bound curves, optionally with empirical columns");
  swc->add_option("--preset", sw.preset, "fig3, fig4 or fig5");
  swc->add_option("--kind", sw.kind, "bounded, robust-scaled or robust-bounded");
  swc->add_option("--from", sw.from, "Grid start");
  swc->add_option("--to", sw.to, "Grid end");
  swc->add_option("--points", sw.points, "Grid points");
  swc->add_option("--beta", sw.beta, "Bound used by robust-bounded sweeps");
  swc->add_flag("--empirical", sw.empirical, "Add empirical PoA columns");
  swc->add_option("--output", sw.output, "Output CSV (default stdout)");
  add_solver_options(swc, sw.solver);

  AtomicOpts at;
  auto* atc = app.add_subcommand("atomic-lp", "Optimal atomic incentives by linear programming");
  atc->add_option("--spec", at.spec, "Basis spec JSON (file or inline)");
  atc->add_option("--degree", at.degree, "Use the basis {1, x, ..., x^degree}");
  atc->add_option("--n", at.n, "Number of players");
  atc->add_option("--beta", at.beta, "Budget bound (omit for unconstrained)");
  atc->add_option("--sign", at.sign, "toll or subsidy")->check(CLI::IsMember({"toll", "subsidy"}));
  atc->add_option("--beta-sweep", at.beta_sweep, "lo:hi:count, writes a toll/subsidy CSV");
  atc->add_option("--dump-lp", at.dump_lp, "Write the LPs in plain text");
  atc->add_option("--output", at.output, "Output file (default stdout)");
  add_solver_options(atc, at.solver);

  VerifyCliOpts ve;
  auto* vec = app.add_subcommand("verify", "Regression checks against the reference values");
  vec->add_option("--filter", ve.filter, "Group name substring, or group.check prefix");
  vec->add_option("--inject-fault", ve.faults, "Perturb an evaluator (prop1..prop4)");
  add_solver_options(vec, ve.solver);

  GenOpts ge;
  auto* gec = app.add_subcommand("gen", "Write instance files");
  gec->add_option("--kind", ge.kind, "fig1, pigou, parallel, corpus or atomic")->required();
  gec->add_option("--p", ge.p, "Pigou degree");
  gec->add_option("--demand", ge.demand, "Pigou demand");
  gec->add_option("--a", ge.a, "Parallel slopes")->delimiter(',');
  gec->add_option("--b", ge.b, "Parallel intercepts")->delimiter(',');
  gec->add_option("--rate", ge.rate, "Parallel demand");
  gec->add_option("--degree", ge.degree, "Atomic polynomial degree");
  gec->add_option("--n", ge.n, "Atomic players");
  gec->add_option("--beta", ge.beta, "Atomic budget bound");
  gec->add_option("--sign", ge.sign, "toll or subsidy");
  gec->add_option("--output", ge.output, "Output file (default stdout)");
  gec->add_option("--output-dir", ge.output_dir, "Directory for --kind corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
    return kExitInput;
  }

  try {
    if (*analyze) {
      if (an.instance.empty() && an.builtin.empty()) throw std::invalid_argument("analyze needs --instance or --builtin");
      return cmd_analyze(an, out);
    }
    if (*swc) return cmd_sweep(sw, out);
    if (*atc) return cmd_atomic_lp(at, out);
    if (*vec) return cmd_verify(ve, out);
    if (*gec) return cmd_gen(ge, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace congestion
