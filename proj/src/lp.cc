#include "congestion/lp.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace congestion {

std::size_t LpProblem::add_variable(std::string name, VarKind kind, double cost) {
  if (!std::isfinite(cost)) throw std::invalid_argument("objective coefficient is not finite");
  names.push_back(std::move(name));
  kinds.push_back(kind);
  objective.push_back(cost);
  return names.size() - 1;
}

void LpProblem::add_row(std::string name, std::vector<std::pair<std::size_t, double>> coeffs, RowSense sense,
                        double rhs) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("row '" + name + "' has a non-finite right-hand side");
  for (const auto& [j, a] : coeffs) {
    if (j >= names.size()) throw std::invalid_argument("row '" + name + "' references an unknown variable");
    if (!std::isfinite(a)) throw std::invalid_argument("row '" + name + "' has a non-finite coefficient");
  }
  rows.push_back({std::move(name), std::move(coeffs), sense, rhs});
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;

enum class ColKind { kStructural, kSlack, kSurplus, kArtificial };

struct Column {
  ColKind kind = ColKind::kStructural;
  std::size_t var = 0;  // structural: original variable; others: row index
  double sign = 1.0;    // structural: +1 or -1 for the negative part of a free var
};

class Tableau {
 public:
  Tableau(const LpProblem& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    m_ = lp.rows.size();
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
      cols_.push_back({ColKind::kStructural, j, 1.0});
      if (lp.kinds[j] == VarKind::kFree) cols_.push_back({ColKind::kStructural, j, -1.0});
    }
    const std::size_t n_struct = cols_.size();

    flipped_.assign(m_, false);
    std::vector<RowSense> sense(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp.rows[i];
      sense[i] = row.sense;
      if (row.rhs < 0.0 || (row.rhs == 0.0 && row.sense == RowSense::kGe)) {
        flipped_[i] = true;
        if (sense[i] == RowSense::kGe) sense[i] = RowSense::kLe;
        else if (sense[i] == RowSense::kLe) sense[i] = RowSense::kGe;
      }
    }
    slack_col_.assign(m_, npos);
    art_col_.assign(m_, npos);
    for (std::size_t i = 0; i < m_; ++i) {
      if (sense[i] == RowSense::kLe) {
        slack_col_[i] = cols_.size();
        cols_.push_back({ColKind::kSlack, i, 1.0});
      } else {
        if (sense[i] == RowSense::kGe) {
          slack_col_[i] = cols_.size();
          cols_.push_back({ColKind::kSurplus, i, -1.0});
        }
        art_col_[i] = cols_.size();
        cols_.push_back({ColKind::kArtificial, i, 1.0});
      }
    }
    n_ = cols_.size();
    t_.assign(m_, std::vector<double>(n_ + 1, 0.0));
    basis_.assign(m_, npos);
    for (std::size_t i = 0; i < m_; ++i) {
      const double s = flipped_[i] ? -1.0 : 1.0;
      for (const auto& [v, a] : lp.rows[i].coeffs) {
        for (std::size_t c = 0; c < n_struct; ++c) {
          if (cols_[c].var == v) t_[i][c] += s * a * cols_[c].sign;
        }
      }
      t_[i][n_] = s * lp.rows[i].rhs;
      if (slack_col_[i] != npos) t_[i][slack_col_[i]] = cols_[slack_col_[i]].sign;
      if (art_col_[i] != npos) t_[i][art_col_[i]] = 1.0;
      basis_[i] = art_col_[i] != npos ? art_col_[i] : slack_col_[i];
    }
  }

  LpSolution solve() {
    LpSolution sol;
    // Phase 1: maximize -sum of artificials.
    bool need_phase1 = std::any_of(art_col_.begin(), art_col_.end(), [](std::size_t c) { return c != npos; });
    if (need_phase1) {
      std::vector<double> c(n_, 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        if (cols_[j].kind == ColKind::kArtificial) c[j] = -1.0;
      }
      set_objective(c);
      const LpStatus st = iterate(false);
      if (st == LpStatus::kIterationLimit) return finish(sol, st);
      if (-obj_[n_] < -1e-9 * std::max(1.0, rhs_scale())) return finish(sol, LpStatus::kInfeasible);
      drive_out_artificials();
    }
    std::vector<double> c(n_, 0.0);
    const double dir = lp_.maximize ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (cols_[j].kind == ColKind::kStructural) c[j] = dir * lp_.objective[cols_[j].var] * cols_[j].sign;
    }
    set_objective(c);
    const LpStatus st = iterate(true);
    return finish(sol, st);
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  double rhs_scale() const {
    double s = 0.0;
    for (const auto& row : t_) s = std::max(s, std::abs(row[n_]));
    return s;
  }

  void set_objective(const std::vector<double>& c) {
    obj_.assign(n_ + 1, 0.0);
    for (std::size_t j = 0; j < n_; ++j) obj_[j] = c[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) obj_[j] -= cb * t_[i][j];
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    ++pivots_;
    const double p = t_[r][c];
    for (double& v : t_[r]) v /= p;
    t_[r][c] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = t_[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) t_[i][j] -= f * t_[r][j];
      t_[i][c] = 0.0;
    }
    const double f = obj_[c];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= n_; ++j) obj_[j] -= f * t_[r][j];
      obj_[c] = 0.0;
    }
    basis_[r] = c;
  }

  LpStatus iterate(bool freeze_artificials) {
    bool bland = false;
    std::size_t degenerate = 0;
    while (true) {
      if (pivots_ >= opt_.max_pivots) return LpStatus::kIterationLimit;
      std::size_t enter = npos;
      double best = kCostTol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (freeze_artificials && cols_[j].kind == ColKind::kArtificial) continue;
        if (obj_[j] > best) {
          enter = j;
          if (bland) break;
          best = obj_[j];
        } else if (bland && obj_[j] > kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter == npos) return LpStatus::kOptimal;

      std::size_t leave = npos;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = t_[i][enter];
        if (a <= kPivotTol) continue;
        const double q = std::max(t_[i][n_], 0.0) / a;
        bool take = false;
        if (q < ratio - 1e-12) {
          take = true;
        } else if (q <= ratio + 1e-12 && leave != npos) {
          take = bland ? basis_[i] < basis_[leave] : a > t_[leave][enter];
        }
        if (take) {
          ratio = q;
          leave = i;
        }
      }
      if (leave == npos) return LpStatus::kUnbounded;
      const bool degenerate_step = ratio <= 1e-12;
      pivot(leave, enter);
      if (degenerate_step) {
        if (++degenerate >= opt_.degenerate_limit) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (cols_[basis_[i]].kind != ColKind::kArtificial) continue;
      std::size_t best = npos;
      double mag = kPivotTol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (cols_[j].kind == ColKind::kArtificial) continue;
        if (std::abs(t_[i][j]) > mag) {
          mag = std::abs(t_[i][j]);
          best = j;
        }
      }
      // A row with no usable entry is redundant; its artificial stays basic at zero.
      if (best != npos) pivot(i, best);
    }
  }

  LpSolution& finish(LpSolution& sol, LpStatus st) {
    sol.status = st;
    sol.pivots = pivots_;
    if (st != LpStatus::kOptimal) return sol;

    std::vector<double> col_value(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) col_value[basis_[i]] = t_[i][n_];
    sol.x.assign(lp_.num_vars(), 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (cols_[j].kind == ColKind::kStructural) sol.x[cols_[j].var] += cols_[j].sign * col_value[j];
    }

    // Multipliers of the normalized rows, from the reduced costs of their unit columns.
    sol.duals.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double y = 0.0;
      if (art_col_[i] != npos) y = -obj_[art_col_[i]];
      else y = -obj_[slack_col_[i]];
      if (flipped_[i]) y = -y;
      sol.duals[i] = y;
    }
    certify(sol);
    return sol;
  }

  void certify(LpSolution& sol) const {
    const double tol = opt_.tolerance;
    const double dir = lp_.maximize ? 1.0 : -1.0;
    double viol = 0.0;
    sol.slacks.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      double act = 0.0;
      for (const auto& [v, a] : row.coeffs) act += a * sol.x[v];
      double slack = 0.0;
      switch (row.sense) {
        case RowSense::kGe: slack = act - row.rhs; break;
        case RowSense::kLe: slack = row.rhs - act; break;
        case RowSense::kEq: slack = -std::abs(act - row.rhs); break;
      }
      sol.slacks[i] = slack;
      viol = std::max(viol, -slack);
    }
    for (std::size_t j = 0; j < lp_.num_vars(); ++j) {
      if (lp_.kinds[j] == VarKind::kNonneg) viol = std::max(viol, -sol.x[j]);
    }
    sol.max_row_violation = viol;

    double obj = 0.0;
    for (std::size_t j = 0; j < lp_.num_vars(); ++j) obj += lp_.objective[j] * sol.x[j];
    sol.objective = obj;
    sol.objective_error = std::abs(obj - dir * -obj_[n_]);

    // Dual feasibility in the maximization form: r_j = c_j - A_j^T y.
    std::vector<double> r(lp_.num_vars(), 0.0);
    for (std::size_t j = 0; j < lp_.num_vars(); ++j) r[j] = dir * lp_.objective[j];
    double dual_obj = 0.0;
    double dviol = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      const double y = sol.duals[i];
      for (const auto& [v, a] : row.coeffs) r[v] -= a * y;
      dual_obj += y * row.rhs;
      if (row.sense == RowSense::kLe) dviol = std::max(dviol, -y);
      if (row.sense == RowSense::kGe) dviol = std::max(dviol, y);
    }
    for (std::size_t j = 0; j < lp_.num_vars(); ++j) {
      dviol = std::max(dviol, lp_.kinds[j] == VarKind::kFree ? std::abs(r[j]) : r[j]);
    }
    sol.max_reduced_cost_violation = dviol;
    sol.duality_gap = std::abs(dual_obj - dir * obj);
    const double scale = std::max(1.0, std::abs(obj));
    sol.certified = viol <= tol && sol.objective_error <= tol * scale && dviol <= tol && sol.duality_gap <= tol * scale;
  }

  const LpProblem& lp_;
  const SimplexOptions& opt_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<Column> cols_;
  std::vector<bool> flipped_;
  std::vector<std::size_t> slack_col_;
  std::vector<std::size_t> art_col_;
  std::vector<std::vector<double>> t_;
  std::vector<double> obj_;
  std::vector<std::size_t> basis_;
  std::size_t pivots_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpProblem& lp, const SimplexOptions& options) {
  if (lp.kinds.size() != lp.names.size() || lp.objective.size() != lp.names.size()) {
    throw std::invalid_argument("LP variable metadata is inconsistent");
  }
  Tableau tab(lp, options);
  return tab.solve();
}

void dump_lp(std::ostream& os, const LpProblem& lp) {
  const auto term = [&](double a, std::size_t j, bool first) {
    std::string s;
    if (a < 0) s += first ? "-" : " - ";
    else if (!first) s += " + ";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(a));
    return s + buf + " " + lp.names[j];
  };
  os << (lp.maximize ? "max:" : "min:");
  bool first = true;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (lp.objective[j] == 0.0) continue;
    os << ' ' << term(lp.objective[j], j, first);
    first = false;
  }
  if (first) os << " 0";
  os << '\n';
  for (const auto& row : lp.rows) {
    os << row.name << ':';
    first = true;
    for (const auto& [j, a] : row.coeffs) {
      if (a == 0.0) continue;
      os << ' ' << term(a, j, first);
      first = false;
    }
    if (first) os << " 0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", row.rhs);
    os << (row.sense == RowSense::kGe ? " >= " : row.sense == RowSense::kLe ? " <= " : " = ") << buf << '\n';
  }
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (lp.kinds[j] == VarKind::kFree) os << "free: " << lp.names[j] << '\n';
  }
}

}  // namespace congestion
