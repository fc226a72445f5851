#include "congestion/incentives.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace congestion {

std::string to_string(SignClass s) {
  switch (s) {
    case SignClass::kZero: return "zero";
    case SignClass::kToll: return "toll";
    case SignClass::kSubsidy: return "subsidy";
    case SignClass::kMixed: return "mixed";
  }
  return "unknown";
}

SignClass classify_sign(const Polynomial& p, double upper, std::size_t grid_points) {
  bool pos = false, neg = false;
  const std::size_t n = std::max<std::size_t>(grid_points, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = upper * static_cast<double>(i) / static_cast<double>(n - 1);
    const double v = p(f);
    if (v > 0.0) pos = true;
    if (v < 0.0) neg = true;
  }
  if (pos && neg) return SignClass::kMixed;
  if (pos) return SignClass::kToll;
  if (neg) return SignClass::kSubsidy;
  return SignClass::kZero;
}

namespace {

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be >= 0");
}

void require_bounds(double s_low, double s_high) {
  if (!(s_low > 0.0) || !(s_high >= s_low) || !std::isfinite(s_high)) {
    throw std::invalid_argument("sensitivity bounds must satisfy 0 < s_low <= s_high");
  }
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

IncentiveMechanism IncentiveMechanism::none() { return IncentiveMechanism{}; }

IncentiveMechanism IncentiveMechanism::marginal_cost() {
  IncentiveMechanism m;
  m.kind_ = Kind::kMarginalCost;
  m.rule_.mc = 1.0;
  return m;
}

IncentiveMechanism IncentiveMechanism::scaled_marginal_cost(double s_low, double s_high) {
  require_bounds(s_low, s_high);
  IncentiveMechanism m;
  m.kind_ = Kind::kScaledMarginalCost;
  m.rule_.a = 1.0 / std::sqrt(s_low * s_high);
  m.params_ = {{"s_low", s_low}, {"s_high", s_high}};
  return m;
}

IncentiveMechanism IncentiveMechanism::affine(double k1, double k2) {
  if (!std::isfinite(k1) || !std::isfinite(k2)) throw std::invalid_argument("affine coefficients must be finite");
  IncentiveMechanism m;
  m.kind_ = Kind::kAffine;
  m.rule_.a = k1;
  m.rule_.b = k2;
  m.params_ = {{"k1", k1}, {"k2", k2}};
  return m;
}

IncentiveMechanism IncentiveMechanism::opt_bounded_toll_affine(double beta) {
  require_nonneg(beta, "beta");
  IncentiveMechanism m;
  m.kind_ = Kind::kOptToll;
  m.rule_.a = std::min(beta, 1.0);
  m.bound_ = beta;
  m.params_ = {{"beta", beta}};
  return m;
}

IncentiveMechanism IncentiveMechanism::opt_bounded_subsidy_affine(double beta) {
  require_nonneg(beta, "beta");
  IncentiveMechanism m;
  m.kind_ = Kind::kOptSubsidy;
  m.rule_.b = -std::min(beta, 0.5);
  m.bound_ = beta;
  m.params_ = {{"beta", beta}};
  return m;
}

IncentiveMechanism IncentiveMechanism::nominal_equivalent(const IncentiveMechanism& base, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
  IncentiveMechanism m;
  m.kind_ = Kind::kNominal;
  m.rule_.mc = lambda * base.rule_.mc;
  m.rule_.lat = lambda * base.rule_.lat + (lambda - 1.0);
  m.rule_.a = lambda * base.rule_.a;
  m.rule_.b = lambda * base.rule_.b;
  m.table_ = base.table_;
  m.table_scale_ = lambda * base.table_scale_;
  m.params_ = {{"lambda", lambda}};
  m.base_ = std::make_shared<const IncentiveMechanism>(base);
  return m;
}

IncentiveMechanism IncentiveMechanism::edge_table(std::map<std::string, Polynomial> table) {
  IncentiveMechanism m;
  m.kind_ = Kind::kEdgeTable;
  m.table_ = std::move(table);
  return m;
}

Polynomial IncentiveMechanism::incentive_poly(const LatencyFunction& latency, const std::string& edge_id) const {
  const Polynomial& l = latency.poly();
  Polynomial tau({0.0});
  if (rule_.needs_affine()) {
    if (!latency.is_affine()) {
      throw std::invalid_argument(describe() + " requires affine latencies, edge '" + edge_id + "' has " +
                                  l.to_string());
    }
    tau += Polynomial({rule_.b * latency.intercept(), rule_.a * latency.slope()});
  }
  if (rule_.mc != 0.0) tau += rule_.mc * l.derivative().times_x();
  if (rule_.lat != 0.0) tau += rule_.lat * l;
  if (!table_.empty()) {
    auto it = table_.find(edge_id);
    if (it != table_.end()) tau += table_scale_ * it->second;
  }
  return tau;
}

IncentiveFunction IncentiveMechanism::apply(const LatencyFunction& latency, std::size_t edge,
                                            const RoutingProblem& problem) const {
  const std::string& id = edge < problem.num_edges() ? problem.edges()[edge].id : std::string{};
  IncentiveFunction fn;
  fn.poly = incentive_poly(latency, id);
  fn.sign = classify_sign(fn.poly, std::max(problem.total_demand(), 0.0));
  return fn;
}

std::vector<IncentiveFunction> IncentiveMechanism::apply_all(const RoutingProblem& problem) const {
  std::vector<IncentiveFunction> out;
  out.reserve(problem.num_edges());
  for (std::size_t e = 0; e < problem.num_edges(); ++e) out.push_back(apply(problem.edges()[e].latency, e, problem));
  return out;
}

std::vector<Polynomial> IncentiveMechanism::incentive_polys(const RoutingProblem& problem) const {
  std::vector<Polynomial> out;
  out.reserve(problem.num_edges());
  for (const auto& e : problem.edges()) out.push_back(incentive_poly(e.latency, e.id));
  return out;
}

std::string IncentiveMechanism::describe() const {
  std::string args;
  for (const auto& [k, v] : params_) {
    if (kind_ == Kind::kNominal) break;
    if (!args.empty()) args += ", ";
    args += k + "=" + fmt_num(v);
  }
  switch (kind_) {
    case Kind::kNone: return "none";
    case Kind::kMarginalCost: return "mc";
    case Kind::kScaledMarginalCost: return "smc(" + args + ")";
    case Kind::kAffine: return "affine(" + args + ")";
    case Kind::kOptToll: return "opt-toll(" + args + ")";
    case Kind::kOptSubsidy: return "opt-subsidy(" + args + ")";
    case Kind::kNominal: return "nominal(" + base_->describe() + ", lambda=" + fmt_num(params_[0].second) + ")";
    case Kind::kEdgeTable: return "edge-table(" + std::to_string(table_.size()) + " edges)";
  }
  return "unknown";
}

AffineCoeffs opt_robust_toll_coeffs(double beta, double s_low, double s_high) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  require_bounds(s_low, s_high);
  const double prod = s_low * s_high;
  const double k2 = std::max(0.0, (beta * beta * prod - 1.0) / (s_low + s_high + 2.0 * beta * prod));
  return {beta, k2};
}

AffineCoeffs opt_robust_subsidy_coeffs(double beta, double s_low, double s_high) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  require_bounds(s_low, s_high);
  return {0.0, -std::min(beta, 1.0 / (s_low + s_high))};
}

SensitivityProfile::SensitivityProfile(std::vector<std::vector<SensitivityClass>> per_od, double s_low,
                                       double s_high)
    : per_od_(std::move(per_od)), s_low_(s_low), s_high_(s_high) {
  require_bounds(s_low_, s_high_);
  for (std::size_t i = 0; i < per_od_.size(); ++i) {
    const auto& classes = per_od_[i];
    if (classes.empty()) throw std::invalid_argument("OD " + std::to_string(i) + " has no sensitivity classes");
    double sum = 0.0;
    for (const auto& c : classes) {
      if (!(c.fraction >= 0.0)) throw std::invalid_argument("class fractions must be nonnegative");
      if (!(c.s > 0.0)) throw std::invalid_argument("sensitivities must be positive");
      const double tol = 1e-12 * std::max(1.0, s_high_);
      if (c.s < s_low_ - tol || c.s > s_high_ + tol) {
        throw std::invalid_argument("sensitivity " + fmt_num(c.s) + " outside [" + fmt_num(s_low_) + ", " +
                                    fmt_num(s_high_) + "]");
      }
      sum += c.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("class fractions of OD " + std::to_string(i) + " sum to " + fmt_num(sum));
    }
  }
}

SensitivityProfile SensitivityProfile::homogeneous(std::size_t num_od, double s) {
  return SensitivityProfile(std::vector<std::vector<SensitivityClass>>(num_od, {SensitivityClass{1.0, s}}), s, s);
}

SensitivityProfile SensitivityProfile::per_od_constant(const std::vector<double>& s) {
  if (s.empty()) throw std::invalid_argument("per-OD sensitivities must not be empty");
  std::vector<std::vector<SensitivityClass>> per_od;
  for (double v : s) per_od.push_back({SensitivityClass{1.0, v}});
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  return SensitivityProfile(std::move(per_od), *lo, *hi);
}

SensitivityProfile SensitivityProfile::two_point(double s_low, double s_high, const std::vector<double>& low_fraction) {
  std::vector<std::vector<SensitivityClass>> per_od;
  for (double w : low_fraction) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("two-point mass split must lie in [0, 1]");
    per_od.push_back({SensitivityClass{w, s_low}, SensitivityClass{1.0 - w, s_high}});
  }
  return SensitivityProfile(std::move(per_od), s_low, s_high);
}

bool SensitivityProfile::is_homogeneous() const {
  for (const auto& classes : per_od_) {
    for (const auto& c : classes) {
      if (c.fraction > 0.0 && c.s != 1.0) return false;
    }
  }
  return true;
}

double sensitivity_transform(double s, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double denom = lambda + s - s * lambda;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("sensitivity pushforward denominator is nonpositive for s=" + fmt_num(s) +
                                ", lambda=" + fmt_num(lambda));
  }
  return s / denom;
}

SensitivityProfile sensitivity_pushforward(const SensitivityProfile& profile, double lambda) {
  std::vector<std::vector<SensitivityClass>> per_od = profile.per_od();
  for (std::size_t i = 0; i < per_od.size(); ++i) {
    for (std::size_t c = 0; c < per_od[i].size(); ++c) {
      try {
        per_od[i][c].s = sensitivity_transform(per_od[i][c].s, lambda);
      } catch (const std::invalid_argument& err) {
        throw std::invalid_argument(std::string(err.what()) + " (OD " + std::to_string(i) + ", class " +
                                    std::to_string(c) + ")");
      }
    }
  }
  // g(., lambda) is increasing in s whenever it is defined, so the bounds map to bounds.
  return SensitivityProfile(std::move(per_od), sensitivity_transform(profile.s_low(), lambda),
                            sensitivity_transform(profile.s_high(), lambda));
}

BoundCheck check_bound(const IncentiveMechanism& mechanism, const RoutingProblem& problem, double beta,
                       IncentiveSign sign, std::size_t grid_points) {
  require_nonneg(beta, "beta");
  const double upper = problem.total_demand();
  const std::size_t n = std::max<std::size_t>(grid_points, 2);
  constexpr double kTol = 1e-9;

  bool all_tight = true;
  for (std::size_t e = 0; e < problem.num_edges(); ++e) {
    const auto& lat = problem.edges()[e].latency;
    const Polynomial tau = mechanism.incentive_poly(lat, problem.edges()[e].id);
    bool tight = false;
    bool latency_vanishes = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = upper * static_cast<double>(i) / static_cast<double>(n - 1);
      const double l = lat.eval(f);
      const double t = tau(f);
      const double cap = beta * l;
      const double slack = kTol * std::max(1.0, std::abs(cap));
      const bool ok = sign == IncentiveSign::kToll ? (t >= -slack && t <= cap + slack)
                                                   : (t <= slack && t >= -cap - slack);
      if (!ok) return BoundCheck{BoundCheck::Status::kViolated, e, f, t};
      if (l > 0.0) {
        latency_vanishes = false;
        if (std::abs(std::abs(t) - cap) <= slack) tight = true;
      }
    }
    if (!tight && !latency_vanishes) all_tight = false;
  }
  return BoundCheck{all_tight ? BoundCheck::Status::kTight : BoundCheck::Status::kOk, 0, 0.0, 0.0};
}

}  // namespace congestion
