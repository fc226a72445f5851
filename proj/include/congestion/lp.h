#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace congestion {

enum class RowSense { kGe, kLe, kEq };
enum class VarKind { kNonneg, kFree };

struct LpRow {
  std::string name;
  std::vector<std::pair<std::size_t, double>> coeffs;
  RowSense sense = RowSense::kGe;
  double rhs = 0.0;
};

// max (or min) c.x subject to rows, with nonnegative or free variables.
struct LpProblem {
  bool maximize = true;
  std::vector<std::string> names;
  std::vector<VarKind> kinds;
  std::vector<double> objective;
  std::vector<LpRow> rows;

  std::size_t add_variable(std::string name, VarKind kind = VarKind::kNonneg, double cost = 0.0);
  void add_row(std::string name, std::vector<std::pair<std::size_t, double>> coeffs, RowSense sense, double rhs);
  std::size_t num_vars() const { return names.size(); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
  // a.x - rhs for >= rows, rhs - a.x for <= rows, -|a.x - rhs| for equalities.
  std::vector<double> slacks;
  // Row multipliers: >= 0 on <= rows and <= 0 on >= rows for a maximization.
  std::vector<double> duals;
  std::size_t pivots = 0;
  // Recheck results, filled for optimal solutions.
  double max_row_violation = 0.0;
  double objective_error = 0.0;
  double max_reduced_cost_violation = 0.0;
  double duality_gap = 0.0;
  bool certified = false;
};

struct SimplexOptions {
  std::size_t max_pivots = 1000000;
  double tolerance = 1e-7;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_limit = 50;
};

// Dense two-phase tableau simplex. Optimal solutions are re-verified row by
// row against the original problem.
LpSolution solve_lp(const LpProblem& lp, const SimplexOptions& options = {});

// Plain-text dump: objective line, one line per row, then free variables.
void dump_lp(std::ostream& os, const LpProblem& lp);

}  // namespace congestion
