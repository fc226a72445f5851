#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "congestion/equilibrium.h"

namespace congestion {

struct VerifyCheck {
  std::string name;
  std::string expected;
  std::string actual;
  std::string tolerance;
  bool pass = false;
  // The failure came from a solve that did not converge.
  bool nonconverged = false;
};

// Closed-form evaluators used by the regression suite; replaceable so the
// suite itself can be exercised against a broken evaluator.
struct Evaluators {
  std::function<double(double)> prop1_toll;
  std::function<double(double)> prop1_subsidy;
  std::function<double(double)> prop2_smc;
  std::function<double(double, double)> prop2_nes;
  std::function<double(double, double, double)> prop3;
  std::function<double(double, double, double)> prop4;

  static Evaluators standard();
  // Adds 0.01 to the named evaluator (prop1, prop2, prop3 or prop4).
  Evaluators with_fault(const std::string& name) const;
};

struct VerifyOptions {
  // Checks whose name contains this substring; empty runs all.
  std::string filter;
  std::vector<std::string> faults;
  SolverConfig config;
};

// Groups: ex1, ex3, prop1, prop2, prop3, prop4, thm5.
std::vector<std::string> verify_groups();
std::vector<VerifyCheck> run_verify(const VerifyOptions& options);
void print_checks(std::ostream& os, const std::vector<VerifyCheck>& checks);

}  // namespace congestion
