#include "congestion/io.h"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace congestion {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "expected a finite number");
  return v;
}

double number_field(const Json& j, const char* key, const std::string& where) {
  return number(field(j, key, where), where + "." + key);
}

std::string string_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> number_array(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

const Json& params_of(const Json& j) {
  static const Json empty = Json::object();
  auto it = j.find("params");
  return it == j.end() ? empty : *it;
}

}  // namespace

LatencyFunction latency_from_json(const Json& j) {
  const std::string kind = string_field(j, "kind", "latency");
  if (kind == "affine") {
    const double a = number_field(j, "a", "latency");
    const double b = number_field(j, "b", "latency");
    if (a < 0.0 || b < 0.0) fail("latency", "affine coefficients must be nonnegative");
    return LatencyFunction::affine(a, b);
  }
  if (kind == "poly") {
    auto coeffs = number_array(field(j, "coeffs", "latency"), "latency.coeffs");
    if (coeffs.empty()) fail("latency.coeffs", "must not be empty");
    for (double c : coeffs)
      if (c < 0.0) fail("latency.coeffs", "coefficients must be nonnegative");
    return LatencyFunction::polynomial(std::move(coeffs));
  }
  fail("latency.kind", "unknown kind '" + kind + "'");
}

Json latency_to_json(const LatencyFunction& l) {
  if (l.kind() == LatencyFunction::Kind::kAffine) return {{"kind", "affine"}, {"a", l.slope()}, {"b", l.intercept()}};
  return {{"kind", "poly"}, {"coeffs", l.poly().coeffs()}};
}

ProblemSpec problem_spec_from_json(const Json& j) {
  if (!j.is_object()) fail("problem", "expected an object");
  ProblemSpec spec;
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) fail("problem.name", "expected a string");
    spec.name = it->get<std::string>();
  }
  const Json& vs = field(j, "vertices", "problem");
  if (!vs.is_array()) fail("problem.vertices", "expected an array");
  for (const auto& v : vs) {
    if (!v.is_string()) fail("problem.vertices", "vertex ids must be strings");
    spec.vertices.push_back(v.get<std::string>());
  }
  const Json& es = field(j, "edges", "problem");
  if (!es.is_array()) fail("problem.edges", "expected an array");
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string where = "problem.edges[" + std::to_string(i) + "]";
    ProblemSpec::EdgeSpec e;
    e.id = string_field(es[i], "id", where);
    e.tail = string_field(es[i], "tail", where);
    e.head = string_field(es[i], "head", where);
    try {
      e.latency = latency_from_json(field(es[i], "latency", where));
    } catch (const std::invalid_argument& ex) {
      fail(where, ex.what());
    }
    spec.edges.push_back(std::move(e));
  }
  const Json& od = field(j, "od", "problem");
  if (!od.is_array()) fail("problem.od", "expected an array");
  for (std::size_t i = 0; i < od.size(); ++i) {
    const std::string where = "problem.od[" + std::to_string(i) + "]";
    spec.od.push_back({string_field(od[i], "origin", where), string_field(od[i], "dest", where),
                       number_field(od[i], "rate", where)});
  }
  return spec;
}

RoutingProblem problem_from_json(const Json& j) { return build_problem(problem_spec_from_json(j)); }

Json problem_to_json(const RoutingProblem& problem) {
  Json j;
  if (!problem.name().empty()) j["name"] = problem.name();
  j["vertices"] = problem.vertices();
  Json edges = Json::array();
  for (const auto& e : problem.edges()) {
    edges.push_back({{"id", e.id},
                     {"tail", problem.vertices()[e.tail]},
                     {"head", problem.vertices()[e.head]},
                     {"latency", latency_to_json(e.latency)}});
  }
  j["edges"] = std::move(edges);
  Json od = Json::array();
  for (const auto& o : problem.od_pairs()) {
    od.push_back({{"origin", problem.vertices()[o.origin]}, {"dest", problem.vertices()[o.dest]}, {"rate", o.rate}});
  }
  j["od"] = std::move(od);
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw std::invalid_argument("'" + path + "': " + ex.what());
  }
}

RoutingProblem load_problem(const std::string& path) {
  const Json j = read_json_file(path);
  try {
    return problem_from_json(j);
  } catch (const std::invalid_argument& ex) {
    throw std::invalid_argument("'" + path + "': " + ex.what());
  }
}

IncentiveMechanism mechanism_from_json(const Json& j) {
  const std::string kind = string_field(j, "kind", "mechanism");
  const Json& p = params_of(j);
  const std::string where = "mechanism.params";
  if (kind == "none") return IncentiveMechanism::none();
  if (kind == "mc") return IncentiveMechanism::marginal_cost();
  if (kind == "smc") {
    return IncentiveMechanism::scaled_marginal_cost(number_field(p, "s_low", where), number_field(p, "s_high", where));
  }
  if (kind == "affine") return IncentiveMechanism::affine(number_field(p, "k1", where), number_field(p, "k2", where));
  if (kind == "opt-toll") return IncentiveMechanism::opt_bounded_toll_affine(number_field(p, "beta", where));
  if (kind == "opt-subsidy") return IncentiveMechanism::opt_bounded_subsidy_affine(number_field(p, "beta", where));
  if (kind == "robust-toll" || kind == "robust-subsidy") {
    const double beta = number_field(p, "beta", where);
    const double lo = number_field(p, "s_low", where);
    const double hi = number_field(p, "s_high", where);
    const AffineCoeffs k =
        kind == "robust-toll" ? opt_robust_toll_coeffs(beta, lo, hi) : opt_robust_subsidy_coeffs(beta, lo, hi);
    return IncentiveMechanism::affine(k.k1, k.k2);
  }
  if (kind == "nominal") {
    const double lambda = number_field(p, "lambda", where);
    const Json* base = nullptr;
    if (auto it = p.find("base"); it != p.end()) base = &*it;
    if (auto it = j.find("base"); !base && it != j.end()) base = &*it;
    if (!base) fail(where, "nominal needs a 'base' mechanism");
    return IncentiveMechanism::nominal_equivalent(mechanism_from_json(*base), lambda);
  }
  if (kind == "edge-table") {
    const Json& t = field(p, "table", where);
    if (!t.is_object()) fail(where + ".table", "expected an object");
    std::map<std::string, Polynomial> table;
    for (auto it = t.begin(); it != t.end(); ++it) {
      table.emplace(it.key(), Polynomial(number_array(it.value(), where + ".table." + it.key())));
    }
    return IncentiveMechanism::edge_table(std::move(table));
  }
  fail("mechanism.kind", "unknown kind '" + kind + "'");
}

Json mechanism_to_json(const IncentiveMechanism& m) {
  using K = IncentiveMechanism::Kind;
  Json params = Json::object();
  for (const auto& [k, v] : m.params()) params[k] = v;
  std::string kind;
  switch (m.kind()) {
    case K::kNone: kind = "none"; break;
    case K::kMarginalCost: kind = "mc"; break;
    case K::kScaledMarginalCost: kind = "smc"; break;
    case K::kAffine: kind = "affine"; break;
    case K::kOptToll: kind = "opt-toll"; break;
    case K::kOptSubsidy: kind = "opt-subsidy"; break;
    case K::kNominal:
      kind = "nominal";
      params["base"] = mechanism_to_json(*m.base());
      break;
    case K::kEdgeTable: kind = "edge-table"; break;
  }
  return {{"kind", kind}, {"params", params}, {"describe", m.describe()}};
}

SensitivityProfile profile_from_json(const Json& j) {
  const Json& per = field(j, "per_od", "profile");
  if (!per.is_array()) fail("profile.per_od", "expected an array");
  std::vector<std::vector<SensitivityClass>> classes;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < per.size(); ++i) {
    const std::string where = "profile.per_od[" + std::to_string(i) + "]";
    if (!per[i].is_array()) fail(where, "expected an array");
    std::vector<SensitivityClass> od;
    for (const auto& c : per[i]) {
      SensitivityClass sc{number_field(c, "fraction", where), number_field(c, "s", where)};
      lo = std::min(lo, sc.s);
      hi = std::max(hi, sc.s);
      od.push_back(sc);
    }
    classes.push_back(std::move(od));
  }
  if (j.contains("s_low")) lo = number_field(j, "s_low", "profile");
  if (j.contains("s_high")) hi = number_field(j, "s_high", "profile");
  return SensitivityProfile(std::move(classes), lo, hi);
}

Json profile_to_json(const SensitivityProfile& p) {
  Json per = Json::array();
  for (const auto& od : p.per_od()) {
    Json cls = Json::array();
    for (const auto& c : od) cls.push_back({{"s", c.s}, {"fraction", c.fraction}});
    per.push_back(std::move(cls));
  }
  return {{"per_od", std::move(per)}, {"s_low", p.s_low()}, {"s_high", p.s_high()}};
}

Json flow_to_json(const RoutingProblem& problem, const FlowAssignment& flow) {
  Json classes = Json::array();
  for (const auto& c : flow.classes) {
    Json paths = Json::array();
    const auto& ps = problem.paths().per_od[c.od];
    for (std::size_t k = 0; k < c.path_flows.size(); ++k) {
      Json ids = Json::array();
      for (std::size_t e : ps[k]) ids.push_back(problem.edges()[e].id);
      paths.push_back({{"edges", std::move(ids)}, {"flow", c.path_flows[k]}});
    }
    classes.push_back({{"od", c.od}, {"s", c.sensitivity}, {"mass", c.mass}, {"paths", std::move(paths)}});
  }
  return classes;
}

Json result_to_json(const RoutingProblem& problem, const EquilibriumResult& r) {
  Json edges = Json::object();
  for (std::size_t e = 0; e < problem.num_edges() && e < r.edge_flows.size(); ++e) {
    edges[problem.edges()[e].id] = r.edge_flows[e];
  }
  return {{"classes", flow_to_json(problem, r.flow)},
          {"edge_flows", std::move(edges)},
          {"total_latency", r.total_latency},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"restart", r.restart}};
}

Json report_to_json(const RoutingProblem& problem, const PoaReport& r) {
  Json j = {{"instance_id", r.instance_id},
            {"mechanism", r.mechanism},
            {"s_low", r.s_low},
            {"s_high", r.s_high},
            {"l_nash", r.l_nash},
            {"l_opt", r.l_opt},
            {"ratio", r.ratio},
            {"within_bound", r.within_bound},
            {"converged", r.converged},
            {"lower_bound", r.lower_bound},
            {"solves", r.solves},
            {"nash", result_to_json(problem, r.nash)},
            {"opt", result_to_json(problem, r.opt)}};
  j["closed_form_bound"] = r.closed_form_bound ? Json(*r.closed_form_bound) : Json(nullptr);
  if (r.worst_profile) j["worst_profile"] = profile_to_json(*r.worst_profile);
  return j;
}

IncentiveSign sign_from_string(const std::string& s) {
  if (s == "toll") return IncentiveSign::kToll;
  if (s == "subsidy") return IncentiveSign::kSubsidy;
  throw std::invalid_argument("sign must be 'toll' or 'subsidy', got '" + s + "'");
}

std::string to_string(IncentiveSign s) { return s == IncentiveSign::kToll ? "toll" : "subsidy"; }

AtomicSpec atomic_spec_from_json(const Json& j) {
  AtomicSpec spec;
  const Json& basis = field(j, "basis", "atomic");
  if (!basis.is_array() || basis.empty()) fail("atomic.basis", "expected a nonempty array");
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const std::string where = "atomic.basis[" + std::to_string(i) + "]";
    const std::string kind = string_field(basis[i], "kind", where);
    if (kind == "monomial") {
      const double d = number_field(basis[i], "degree", where);
      if (d < 0 || d != std::floor(d)) fail(where, "degree must be a nonnegative integer");
      spec.basis.push_back(BasisFunction::monomial(static_cast<int>(d)));
    } else if (kind == "poly") {
      auto coeffs = number_array(field(basis[i], "coeffs", where), where + ".coeffs");
      std::string name = basis[i].contains("name") ? string_field(basis[i], "name", where) : std::string{};
      spec.basis.emplace_back(Polynomial(std::move(coeffs)), std::move(name));
    } else {
      fail(where + ".kind", "unknown kind '" + kind + "'");
    }
  }
  const double n = number_field(j, "n", "atomic");
  if (n < 1 || n != std::floor(n)) fail("atomic.n", "must be a positive integer");
  spec.n = static_cast<int>(n);
  if (auto it = j.find("beta"); it != j.end() && !it->is_null()) {
    const double b = number(*it, "atomic.beta");
    if (b < 0.0) fail("atomic.beta", "must be nonnegative");
    spec.beta = b;
  }
  if (j.contains("sign")) {
    try {
      spec.sign = sign_from_string(string_field(j, "sign", "atomic"));
    } catch (const std::invalid_argument& ex) {
      fail("atomic.sign", ex.what());
    }
  }
  return spec;
}

Json atomic_report_to_json(const AtomicLpReport& r) {
  Json per = Json::array();
  for (const auto& b : r.per_basis) {
    const auto& s = b.solution;
    Json e = {{"basis", b.basis},
              {"status", to_string(s.status)},
              {"rho", b.rho},
              {"poa", b.poa},
              {"f", b.f},
              {"tau", b.tau},
              {"pivots", s.pivots},
              {"max_row_violation", s.max_row_violation},
              {"duality_gap", s.duality_gap},
              {"certified", s.certified}};
    e["nu"] = b.nu ? Json(*b.nu) : Json(nullptr);
    per.push_back(std::move(e));
  }
  Json j = {{"n", r.n},
            {"sign", to_string(r.sign)},
            {"poa", r.poa},
            {"all_optimal", r.all_optimal},
            {"all_certified", r.all_certified},
            {"per_basis", std::move(per)}};
  j["beta"] = r.beta ? Json(*r.beta) : Json(nullptr);
  return j;
}

}  // namespace congestion
