#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace congestion {

// Dense polynomial c0 + c1 x + ... + cp x^p with signed coefficients.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);

  static Polynomial constant(double c) { return Polynomial({c}); }
  static Polynomial monomial(std::size_t power, double coeff = 1.0);

  const std::vector<double>& coeffs() const { return coeffs_; }
  // Coefficient of x^k, zero beyond the stored degree.
  double coeff(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }
  // Degree ignoring trailing zeros; the zero polynomial has degree 0.
  std::size_t degree() const;
  bool is_zero() const;

  double operator()(double x) const;
  Polynomial derivative() const;
  // Integral of the polynomial from 0 to x.
  double integral(double x) const;
  // x * p(x).
  Polynomial times_x() const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(double s, Polynomial p) { return p *= s; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a += (-1.0) * b; }

  // Coefficientwise comparison after trimming trailing zeros.
  bool approx_equal(const Polynomial& other, double tol = 1e-12) const;
  bool operator==(const Polynomial& other) const { return approx_equal(other, 0.0); }

  std::string to_string() const;

 private:
  std::vector<double> coeffs_;
};

// Nonnegative, nondecreasing edge latency. Affine latencies are kept as a
// distinct kind so closed-form mechanisms can dispatch on them.
class LatencyFunction {
 public:
  enum class Kind { kAffine, kPolynomial };

  static LatencyFunction affine(double a, double b);
  static LatencyFunction polynomial(std::vector<double> coeffs);
  static LatencyFunction constant(double c) { return affine(0.0, c); }

  Kind kind() const { return kind_; }
  const Polynomial& poly() const { return poly_; }

  // True when the latency is af + b, whichever kind it was declared as.
  bool is_affine() const { return poly_.degree() <= 1; }
  // a and b of af + b; throws std::invalid_argument for non-affine latencies.
  double slope() const;
  double intercept() const;

  double eval(double f) const;
  double derivative(double f) const;
  // l(f) + f l'(f).
  double marginal_cost(double f) const;

  bool operator==(const LatencyFunction& other) const { return poly_ == other.poly_; }

 private:
  LatencyFunction(Kind kind, Polynomial poly) : kind_(kind), poly_(std::move(poly)) {}

  Kind kind_ = Kind::kAffine;
  Polynomial poly_;
};

// Sum over edges of f_e * l_e(f_e).
double total_latency(std::span<const LatencyFunction> latencies, std::span<const double> edge_flows);

}  // namespace congestion
