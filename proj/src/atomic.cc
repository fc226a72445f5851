#include "congestion/atomic.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "congestion/equilibrium.h"

namespace congestion {

BasisFunction::BasisFunction(Polynomial p, std::string name) : poly_(std::move(p)), name_(std::move(name)) {
  for (double c : poly_.coeffs()) {
    if (c < 0.0) throw std::invalid_argument("basis functions need nonnegative coefficients");
  }
  if (name_.empty()) name_ = poly_.to_string();
}

BasisFunction BasisFunction::monomial(int degree) {
  if (degree < 0) throw std::invalid_argument("monomial degree must be >= 0");
  std::string name = degree == 0 ? "1" : degree == 1 ? "x" : "x^" + std::to_string(degree);
  return BasisFunction(Polynomial::monomial(static_cast<std::size_t>(degree)), name);
}

std::vector<BasisFunction> polynomial_basis(int degree) {
  std::vector<BasisFunction> out;
  for (int d = 0; d <= degree; ++d) out.push_back(BasisFunction::monomial(d));
  return out;
}

AtomicLp build_lp(const BasisFunction& b, int n) {
  if (n < 1) throw std::invalid_argument("player count n must be >= 1");
  AtomicLp out;
  out.n = n;
  for (int k = 1; k <= n; ++k) out.f.push_back(out.lp.add_variable("f" + std::to_string(k)));
  out.rho = out.lp.add_variable("rho", VarKind::kFree, 1.0);

  for (int x = 0; x <= n; ++x) {
    for (int y = 0; x + y <= n; ++y) {
      for (int z = 0; x + y + z <= n; ++z) {
        if (x + y + z == 0) continue;
        std::vector<std::pair<std::size_t, double>> row;
        const double opt = b(x + z) * (x + z);
        const double ne = b(x + y) * (x + y);
        if (ne != 0.0) row.emplace_back(out.rho, -ne);
        if (y > 0 && x + y >= 1) row.emplace_back(out.f[static_cast<std::size_t>(x + y - 1)], y);
        if (z > 0 && x + y + 1 <= n) row.emplace_back(out.f[static_cast<std::size_t>(x + y)], -z);
        out.lp.add_row("c_" + std::to_string(x) + "_" + std::to_string(y) + "_" + std::to_string(z), std::move(row),
                       RowSense::kGe, -opt);
      }
    }
  }
  return out;
}

void add_budget_constraints(AtomicLp& lp, double beta, IncentiveSign sign, const BasisFunction& b) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be a finite value >= 0");
  if (lp.nu) throw std::invalid_argument("budget constraints already present");
  lp.nu = lp.lp.add_variable("nu");
  lp.beta = beta;
  const std::size_t nu = *lp.nu;
  for (int k = 1; k <= lp.n; ++k) {
    const std::size_t fk = lp.f[static_cast<std::size_t>(k - 1)];
    const double bk = b(k);
    const std::string tag = std::to_string(k);
    if (sign == IncentiveSign::kToll) {
      lp.lp.add_row("toll_lo_" + tag, {{fk, 1.0}, {nu, -bk}}, RowSense::kGe, 0.0);
      lp.lp.add_row("toll_hi_" + tag, {{fk, 1.0}, {nu, -bk - beta * bk}}, RowSense::kLe, 0.0);
    } else {
      lp.lp.add_row("sub_hi_" + tag, {{fk, 1.0}, {nu, -bk}}, RowSense::kLe, 0.0);
      lp.lp.add_row("sub_lo_" + tag, {{fk, 1.0}, {nu, -bk + beta * bk}}, RowSense::kGe, 0.0);
    }
  }
}

std::vector<double> optimal_incentive_from_lp(const AtomicLp& lp, const LpSolution& solution, const BasisFunction& b) {
  if (solution.status != LpStatus::kOptimal) {
    throw std::invalid_argument("incentive requested from a non-optimal LP solution (" + to_string(solution.status) + ")");
  }
  double scale = 1.0;
  if (lp.nu) {
    scale = solution.x[*lp.nu];
    if (!(scale > 1e-12)) throw std::runtime_error("budgeted LP returned nu = 0; incentive is undefined");
  }
  std::vector<double> tau(static_cast<std::size_t>(lp.n) + 1, 0.0);
  for (int k = 1; k <= lp.n; ++k) tau[static_cast<std::size_t>(k)] = solution.x[lp.f[static_cast<std::size_t>(k - 1)]] / scale - b(k);
  return tau;
}

AtomicLpReport solve_atomic_lp(const std::vector<BasisFunction>& basis, int n, std::optional<double> beta,
                               IncentiveSign sign, std::size_t jobs) {
  if (basis.empty()) throw std::invalid_argument("basis must not be empty");
  AtomicLpReport rep;
  rep.n = n;
  rep.beta = beta;
  rep.sign = sign;
  rep.per_basis.resize(basis.size());
  parallel_for(basis.size(), jobs, [&](std::size_t j) {
    AtomicLp lp = build_lp(basis[j], n);
    if (beta) add_budget_constraints(lp, *beta, sign, basis[j]);
    BasisLpResult& r = rep.per_basis[j];
    r.basis = basis[j].name();
    r.solution = solve_lp(lp.lp);
    if (r.solution.status != LpStatus::kOptimal) return;
    r.rho = r.solution.x[lp.rho];
    r.poa = 1.0 / r.rho;
    if (lp.nu) r.nu = r.solution.x[*lp.nu];
    for (std::size_t fk : lp.f) r.f.push_back(r.solution.x[fk]);
    r.tau = optimal_incentive_from_lp(lp, r.solution, basis[j]);
  });
  for (const auto& r : rep.per_basis) {
    if (r.solution.status != LpStatus::kOptimal) {
      rep.all_optimal = false;
      rep.all_certified = false;
      continue;
    }
    rep.all_certified = rep.all_certified && r.solution.certified;
    rep.poa = std::max(rep.poa, r.poa);
  }
  return rep;
}

AtomicGame parallel_game(int n, const std::vector<std::vector<double>>& coeffs,
                         const std::vector<BasisFunction>& basis) {
  if (n < 1) throw std::invalid_argument("player count n must be >= 1");
  if (coeffs.empty()) throw std::invalid_argument("game needs at least one resource");
  AtomicGame g;
  g.n = n;
  for (const auto& row : coeffs) {
    if (row.size() != basis.size()) throw std::invalid_argument("one coefficient per basis element expected");
    std::vector<double> lat(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        if (row[j] < 0.0) throw std::invalid_argument("basis coefficients must be nonnegative");
        lat[static_cast<std::size_t>(k)] += row[j] * basis[j](k);
      }
    }
    g.latency.push_back(std::move(lat));
  }
  std::vector<std::vector<std::size_t>> acts;
  for (std::size_t r = 0; r < coeffs.size(); ++r) acts.push_back({r});
  g.actions.assign(static_cast<std::size_t>(n), acts);
  return g;
}

ResourceTable combine_incentives(const std::vector<std::vector<double>>& coeffs,
                                 const std::vector<std::vector<double>>& basis_tau) {
  ResourceTable out;
  for (const auto& row : coeffs) {
    if (row.size() != basis_tau.size()) throw std::invalid_argument("one coefficient per basis incentive expected");
    std::vector<double> t;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (t.empty()) t.assign(basis_tau[j].size(), 0.0);
      if (basis_tau[j].size() != t.size()) throw std::invalid_argument("basis incentive tables differ in length");
      for (std::size_t k = 0; k < t.size(); ++k) t[k] += row[j] * basis_tau[j][k];
    }
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

void validate(const AtomicGame& g, const ResourceTable& tau) {
  if (g.actions.size() != static_cast<std::size_t>(g.n)) throw std::invalid_argument("one action set per player expected");
  const std::size_t loads = static_cast<std::size_t>(g.n) + 1;
  for (const auto& lat : g.latency) {
    if (lat.size() < loads) throw std::invalid_argument("latency table shorter than n+1 loads");
  }
  if (!tau.empty()) {
    if (tau.size() != g.latency.size()) throw std::invalid_argument("one incentive table per resource expected");
    for (const auto& t : tau) {
      if (t.size() < loads) throw std::invalid_argument("incentive table shorter than n+1 loads");
    }
  }
  for (const auto& acts : g.actions) {
    if (acts.empty()) throw std::invalid_argument("every player needs at least one action");
    for (const auto& a : acts) {
      for (std::size_t r : a) {
        if (r >= g.latency.size()) throw std::invalid_argument("action references an unknown resource");
      }
    }
  }
}

std::size_t profile_count(const AtomicGame& g, std::size_t cap) {
  std::size_t total = 1;
  for (const auto& acts : g.actions) {
    if (total > cap / acts.size()) throw std::invalid_argument("profile count exceeds the cap of " + std::to_string(cap));
    total *= acts.size();
  }
  if (total > cap) throw std::invalid_argument("profile count exceeds the cap of " + std::to_string(cap));
  return total;
}

bool next_profile(const AtomicGame& g, Profile& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (++p[i] < g.actions[i].size()) return true;
    p[i] = 0;
  }
  return false;
}

std::vector<int> loads_of(const AtomicGame& g, const Profile& p) {
  std::vector<int> load(g.latency.size(), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t r : g.actions[i][p[i]]) ++load[r];
  }
  return load;
}

}  // namespace

double atomic_total_latency(const AtomicGame& game, const Profile& profile) {
  const auto load = loads_of(game, profile);
  double total = 0.0;
  for (std::size_t r = 0; r < load.size(); ++r) total += load[r] * game.latency[r][static_cast<std::size_t>(load[r])];
  return total;
}

std::vector<Profile> atomic_nash_enumerate(const AtomicGame& game, const ResourceTable& tau,
                                           const std::vector<double>& sensitivities, std::size_t cap) {
  validate(game, tau);
  if (!sensitivities.empty() && sensitivities.size() != game.actions.size()) {
    throw std::invalid_argument("one sensitivity per player expected");
  }
  profile_count(game, cap);
  const auto cost = [&](std::size_t r, int load, double s) {
    double c = game.latency[r][static_cast<std::size_t>(load)];
    if (!tau.empty()) c += s * tau[r][static_cast<std::size_t>(load)];
    return c;
  };

  std::vector<Profile> out;
  Profile p(game.actions.size(), 0);
  do {
    const auto load = loads_of(game, p);
    bool stable = true;
    for (std::size_t i = 0; i < p.size() && stable; ++i) {
      const double s = sensitivities.empty() ? 1.0 : sensitivities[i];
      const auto& mine = game.actions[i][p[i]];
      double current = 0.0;
      for (std::size_t r : mine) current += cost(r, load[r], s);
      for (std::size_t a = 0; a < game.actions[i].size() && stable; ++a) {
        if (a == p[i]) continue;
        double alt = 0.0;
        for (std::size_t r : game.actions[i][a]) {
          const bool shared = std::find(mine.begin(), mine.end(), r) != mine.end();
          alt += cost(r, load[r] + (shared ? 0 : 1), s);
        }
        if (alt < current - 1e-9) stable = false;
      }
    }
    if (stable) out.push_back(p);
  } while (next_profile(game, p));
  return out;
}

AtomicPoa atomic_poa(const AtomicGame& game, const ResourceTable& tau, std::size_t cap) {
  const auto nash = atomic_nash_enumerate(game, tau, {}, cap);
  if (nash.empty()) throw std::runtime_error("no pure Nash equilibrium found");
  AtomicPoa out;
  out.num_nash = nash.size();
  for (const auto& p : nash) {
    const double l = atomic_total_latency(game, p);
    if (out.worst_profile.empty() || l > out.worst_nash) {
      out.worst_nash = l;
      out.worst_profile = p;
    }
  }
  Profile p(game.actions.size(), 0);
  bool first = true;
  do {
    const double l = atomic_total_latency(game, p);
    if (first || l < out.optimum) out.optimum = l;
    first = false;
  } while (next_profile(game, p));
  if (!(out.optimum > 0.0)) throw std::invalid_argument("optimal total latency is zero; price of anarchy is undefined");
  out.ratio = out.worst_nash / out.optimum;
  return out;
}

}  // namespace congestion
