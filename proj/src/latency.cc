#include "congestion/latency.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace congestion {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw std::invalid_argument("polynomial coefficient is not finite");
  }
}

Polynomial Polynomial::monomial(std::size_t power, double coeff) {
  std::vector<double> c(power + 1, 0.0);
  c[power] = coeff;
  return Polynomial(std::move(c));
}

std::size_t Polynomial::degree() const {
  std::size_t d = coeffs_.size();
  while (d > 1 && coeffs_[d - 1] == 0.0) --d;
  return d == 0 ? 0 : d - 1;
}

bool Polynomial::is_zero() const {
  for (double c : coeffs_) {
    if (c != 0.0) return false;
  }
  return true;
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return Polynomial({0.0});
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

double Polynomial::integral(double x) const {
  double acc = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 0;) {
    acc = acc * x + coeffs_[k] / static_cast<double>(k + 1);
  }
  return acc * x;
}

Polynomial Polynomial::times_x() const {
  std::vector<double> c(coeffs_.size() + 1, 0.0);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) c[k + 1] = coeffs_[k];
  return Polynomial(std::move(c));
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), 0.0);
  for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

bool Polynomial::approx_equal(const Polynomial& other, double tol) const {
  const std::size_t n = std::max(coeffs_.size(), other.coeffs_.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double a = coeff(k);
    const double b = other.coeff(k);
    if (std::abs(a - b) > tol * std::max({1.0, std::abs(a), std::abs(b)})) return false;
  }
  return true;
}

std::string Polynomial::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    if (coeffs_[k] == 0.0) continue;
    if (!first) os << (coeffs_[k] < 0 ? " - " : " + ");
    else if (coeffs_[k] < 0) os << "-";
    os << std::abs(coeffs_[k]);
    if (k == 1) os << " f";
    if (k > 1) os << " f^" << k;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

LatencyFunction LatencyFunction::affine(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw std::invalid_argument("affine latency requires a >= 0 and b >= 0");
  }
  return LatencyFunction(Kind::kAffine, Polynomial({b, a}));
}

LatencyFunction LatencyFunction::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial latency needs at least one coefficient");
  for (double c : coeffs) {
    if (!(c >= 0.0)) throw std::invalid_argument("polynomial latency coefficients must be nonnegative");
  }
  return LatencyFunction(Kind::kPolynomial, Polynomial(std::move(coeffs)));
}

double LatencyFunction::slope() const {
  if (!is_affine()) throw std::invalid_argument("latency " + poly_.to_string() + " is not affine");
  return poly_.coeff(1);
}

double LatencyFunction::intercept() const {
  if (!is_affine()) throw std::invalid_argument("latency " + poly_.to_string() + " is not affine");
  return poly_.coeff(0);
}

double LatencyFunction::eval(double f) const {
  if (f < 0.0) throw std::domain_error("latency evaluated at negative flow");
  return poly_(f);
}

double LatencyFunction::derivative(double f) const {
  if (f < 0.0) throw std::domain_error("latency derivative evaluated at negative flow");
  return poly_.derivative()(f);
}

double LatencyFunction::marginal_cost(double f) const { return eval(f) + f * derivative(f); }

double total_latency(std::span<const LatencyFunction> latencies, std::span<const double> edge_flows) {
  if (latencies.size() != edge_flows.size()) {
    throw std::invalid_argument("edge flow vector does not match the edge count");
  }
  double total = 0.0;
  for (std::size_t e = 0; e < latencies.size(); ++e) total += edge_flows[e] * latencies[e].eval(edge_flows[e]);
  return total;
}

}  // namespace congestion
