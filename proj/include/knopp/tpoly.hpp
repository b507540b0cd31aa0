#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "knopp/real_bound.hpp"

namespace knopp {

/// Exact polynomial sum_j c_j * t^j with rational coefficients.
///
/// Used with t = 2^-alpha to hold partial sums F_n(x) and slopes C_n(x)
/// symbolically: every F_n value at a rational point, and every slope, is a
/// finite combination of powers of 2^-alpha. Coefficients are general
/// rationals so periodic points (denominators 3, 7, ...) stay exact.
class TPoly {
 public:
  TPoly() = default;
  TPoly(std::initializer_list<Rational> coefficients);
  explicit TPoly(std::vector<Rational> coefficients);

  static TPoly constant(const Rational& c) { return TPoly({c}); }
  /// c * t^power
  static TPoly monomial(std::size_t power, const Rational& c);

  /// Highest exponent with a nonzero coefficient; 0 for the zero polynomial.
  std::size_t degree() const { return coefficients_.empty() ? 0 : coefficients_.size() - 1; }
  bool is_zero() const { return coefficients_.empty(); }
  Rational coefficient(std::size_t power) const;
  const std::vector<Rational>& coefficients() const { return coefficients_; }

  /// Adds c * t^power in place.
  void add_term(std::size_t power, const Rational& c);

  TPoly& operator+=(const TPoly& rhs);
  TPoly& operator-=(const TPoly& rhs);
  TPoly& operator*=(const Rational& s);
  TPoly operator-() const;
  /// Multiplication by t^k.
  TPoly shifted(std::size_t k) const;

  friend TPoly operator+(TPoly a, const TPoly& b) { return a += b; }
  friend TPoly operator-(TPoly a, const TPoly& b) { return a -= b; }
  friend TPoly operator*(TPoly a, const Rational& s) { return a *= s; }
  friend TPoly operator*(const Rational& s, TPoly a) { return a *= s; }
  friend TPoly operator*(const TPoly& a, const TPoly& b);
  friend bool operator==(const TPoly& a, const TPoly& b) { return a.coefficients_ == b.coefficients_; }

  /// Horner evaluation with outward rounding; `t` may be any bound.
  RealBound evaluate(const RealBound& t) const;
  /// Exact value at a rational point.
  Rational evaluate(const Rational& t) const;

  std::string to_string(const std::string& var = "t") const;

 private:
  void trim();

  std::vector<Rational> coefficients_;
};

}  // namespace knopp
