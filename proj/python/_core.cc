#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "congestion/atomic.h"
#include "congestion/cli.h"
#include "congestion/io.h"
#include "congestion/poa.h"
#include "congestion/verify.h"

namespace py = pybind11;
using namespace congestion;

namespace {

// Dicts cross the boundary as JSON text; the Python wrapper does the
// json.dumps / json.loads.
Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
}

SolverConfig make_config(std::uint64_t seed, std::size_t jobs, std::size_t restarts, std::size_t profile_grid) {
  SolverConfig c;
  c.seed = seed;
  c.jobs = jobs;
  c.restarts = restarts;
  c.profile_grid = profile_grid;
  return c;
}

std::string analyze(const std::string& problem, const std::string& mechanism, double s_low, double s_high,
                    const std::optional<std::vector<double>>& od_sensitivity, std::uint64_t seed, std::size_t jobs,
                    std::size_t restarts, std::size_t profile_grid) {
  const RoutingProblem net = problem_from_json(parse(problem));
  const IncentiveMechanism mech = mechanism_from_json(parse(mechanism));
  const SolverConfig cfg = make_config(seed, jobs, restarts, profile_grid);
  PoaReport rep;
  if (od_sensitivity) {
    rep = poa_instance(net, mech, SensitivityProfile::per_od_constant(*od_sensitivity), cfg);
  } else if (s_low == s_high) {
    rep = poa_instance(net, mech, SensitivityProfile::homogeneous(net.num_od(), s_low), cfg);
  } else {
    rep = poa_instance(net, mech, SensitivityBounds{s_low, s_high}, cfg);
  }
  return report_to_json(net, rep).dump();
}

std::string sweep_csv(const std::string& preset, std::size_t points, bool empirical, std::size_t jobs) {
  SweepSpec spec = preset_spec(preset, points);
  spec.empirical = empirical;
  SolverConfig cfg;
  cfg.jobs = jobs;
  std::ostringstream os;
  write_csv(os, sweep(spec, cfg));
  return os.str();
}

std::string atomic_lp(int degree, int n, std::optional<double> beta, const std::string& sign) {
  return atomic_report_to_json(solve_atomic_lp(polynomial_basis(degree), n, beta, sign_from_string(sign), 1)).dump();
}

py::list verify(const std::string& filter) {
  VerifyOptions opt;
  opt.filter = filter;
  py::list out;
  for (const auto& c : run_verify(opt)) {
    py::dict d;
    d["name"] = c.name;
    d["expected"] = c.expected;
    d["actual"] = c.actual;
    d["tolerance"] = c.tolerance;
    d["pass"] = c.pass;
    d["nonconverged"] = c.nonconverged;
    out.append(std::move(d));
  }
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"cgames"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Congestion games with tolls, subsidies and heterogeneous price sensitivities";
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("fig1_instance", [] { return problem_to_json(fig1_instance()).dump(); });
  m.def("pigou_instance", [](int p, double demand) { return problem_to_json(pigou_instance(p, demand)).dump(); },
        py::arg("p"), py::arg("demand") = 1.0);
  m.def(
      "parallel_affine_instance",
      [](const std::vector<double>& a, const std::vector<double>& b, double rate) {
        auto inst = parallel_affine_instance(a, b, rate);
        return py::make_tuple(problem_to_json(inst.problem).dump(), inst.fully_utilized);
      },
      py::arg("a"), py::arg("b"), py::arg("rate") = 1.0);

  m.def("analyze", &analyze, py::arg("problem"), py::arg("mechanism"), py::arg("s_low") = 1.0,
        py::arg("s_high") = 1.0, py::arg("od_sensitivity") = std::nullopt, py::arg("seed") = 0, py::arg("jobs") = 1,
        py::arg("restarts") = 8, py::arg("profile_grid") = 51);

  m.def("prop1_toll", &poa_bound_prop1_toll, py::arg("beta"));
  m.def("prop1_subsidy", &poa_bound_prop1_subsidy, py::arg("beta"));
  m.def("prop2_smc", &poa_bound_prop2_smc, py::arg("q"));
  m.def("prop2_nes", &poa_bound_prop2_nes, py::arg("s_low"), py::arg("s_high"));
  m.def("prop2_nes_q", &prop2_nes_q, py::arg("s_low"), py::arg("s_high"));
  m.def("prop3", &poa_bound_prop3, py::arg("beta"), py::arg("s_low"), py::arg("s_high"));
  m.def("prop4", &poa_bound_prop4, py::arg("beta"), py::arg("s_low"), py::arg("s_high"));
  m.def(
      "thm5_crossover",
      [](double s_low, double s_high) {
        const Crossover c = thm5_crossover(s_low, s_high);
        py::dict d;
        d["beta_star"] = c.beta_star;
        d["scale"] = c.scale;
        d["s_low_normalized"] = c.s_low_normalized;
        d["s_high_normalized"] = c.s_high_normalized;
        return d;
      },
      py::arg("s_low"), py::arg("s_high"));

  m.def("sweep_csv", &sweep_csv, py::arg("preset"), py::arg("points") = 101, py::arg("empirical") = false,
        py::arg("jobs") = 1);
  m.def("atomic_lp", &atomic_lp, py::arg("degree"), py::arg("n"), py::arg("beta") = std::nullopt,
        py::arg("sign") = "toll");
  m.def("verify", &verify, py::arg("filter") = "");
  m.def("cli", &cli, py::arg("args"));
}
