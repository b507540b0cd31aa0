#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <iosfwd>
#include <string>

namespace knopp {

using Integer = mpz_class;
using Rational = mpq_class;

inline constexpr mpfr_prec_t kDefaultPrecision = 128;
inline constexpr mpfr_prec_t kMaxPrecision = 1024;

/// Owning handle on an MPFR value. Moves are cheap; copies keep precision.
class Real {
 public:
  explicit Real(mpfr_prec_t prec = kDefaultPrecision);
  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(value_); }
  double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(value_, rnd); }

 private:
  mpfr_t value_;
};

/// Closed interval [lower, upper] of extended-precision reals. Every arithmetic
/// operation rounds outward, so a bound that contains x and y yields one that
/// contains x op y.
class RealBound {
 public:
  explicit RealBound(mpfr_prec_t prec = kDefaultPrecision);
  RealBound(double value, mpfr_prec_t prec = kDefaultPrecision);  // NOLINT: exact point
  RealBound(const Real& lower, const Real& upper);

  static RealBound from_rational(const Rational& q, mpfr_prec_t prec = kDefaultPrecision);
  static RealBound from_integer(const Integer& z, mpfr_prec_t prec = kDefaultPrecision);
  /// k * 2^exponent, exact whenever k fits in `prec` bits.
  static RealBound dyadic(const Integer& k, long exponent, mpfr_prec_t prec = kDefaultPrecision);
  static RealBound between(double lo, double hi, mpfr_prec_t prec = kDefaultPrecision);
  /// [lo, +inf]
  static RealBound at_least(double lo, mpfr_prec_t prec = kDefaultPrecision);

  const Real& lower() const { return lower_; }
  const Real& upper() const { return upper_; }
  Real& lower() { return lower_; }
  Real& upper() { return upper_; }
  mpfr_prec_t precision() const { return lower_.precision(); }

  double lower_d() const { return lower_.to_double(MPFR_RNDD); }
  double upper_d() const { return upper_.to_double(MPFR_RNDU); }
  double mid_d() const;
  double width_d() const;
  RealBound midpoint() const;

  bool is_point() const { return mpfr_equal_p(lower_.get(), upper_.get()) != 0; }
  bool is_finite() const;
  bool contains(double x) const;
  bool contains(const Rational& q) const;
  bool contains(const RealBound& other) const;
  bool overlaps(const RealBound& other) const;

  bool certainly_positive() const { return mpfr_sgn(lower_.get()) > 0; }
  bool certainly_negative() const { return mpfr_sgn(upper_.get()) < 0; }
  bool certainly_nonnegative() const { return mpfr_sgn(lower_.get()) >= 0; }
  bool certainly_less(const RealBound& other) const;
  bool certainly_less_equal(const RealBound& other) const;
  bool certainly_zero() const { return mpfr_zero_p(lower_.get()) && mpfr_zero_p(upper_.get()); }

  RealBound& operator+=(const RealBound& rhs);
  RealBound& operator-=(const RealBound& rhs);
  RealBound& operator*=(const RealBound& rhs);
  RealBound& operator/=(const RealBound& rhs);
  RealBound operator-() const;

  /// Multiplication by 2^e; exact.
  RealBound scaled(long e) const;
  /// Same interval at a different working precision (rounded outward).
  RealBound with_precision(mpfr_prec_t prec) const;

  std::string to_string(int digits = 17) const;

  friend RealBound operator+(RealBound lhs, const RealBound& rhs) { return lhs += rhs; }
  friend RealBound operator-(RealBound lhs, const RealBound& rhs) { return lhs -= rhs; }
  friend RealBound operator*(RealBound lhs, const RealBound& rhs) { return lhs *= rhs; }
  friend RealBound operator/(RealBound lhs, const RealBound& rhs) { return lhs /= rhs; }

 private:
  Real lower_;
  Real upper_;
};

std::ostream& operator<<(std::ostream& os, const RealBound& b);

RealBound abs(const RealBound& x);
RealBound sqr(const RealBound& x);
RealBound min(const RealBound& a, const RealBound& b);
RealBound max(const RealBound& a, const RealBound& b);
RealBound hull(const RealBound& a, const RealBound& b);
RealBound intersect(const RealBound& a, const RealBound& b);
RealBound exp2(const RealBound& x);
/// Natural logarithm; requires a non-negative bound (log 0 = -inf).
RealBound log(const RealBound& x);
RealBound log2(const RealBound& x);
RealBound pow(const RealBound& base, const RealBound& exponent);
/// Clamp every member of x into [lo, hi].
RealBound clamp(const RealBound& x, const RealBound& lo, const RealBound& hi);

}  // namespace knopp
