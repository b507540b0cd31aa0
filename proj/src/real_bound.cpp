#include "knopp/real_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "knopp/error.hpp"

namespace knopp {

Real::Real(mpfr_prec_t prec) {
  mpfr_init2(value_, prec);
  mpfr_set_zero(value_, 1);
}

Real::Real(const Real& other) {
  mpfr_init2(value_, other.precision());
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
  value_[0] = other.value_[0];
  other.value_[0]._mpfr_d = nullptr;
}

Real& Real::operator=(const Real& other) {
  if (this == &other) return *this;
  if (value_[0]._mpfr_d == nullptr) {
    mpfr_init2(value_, other.precision());
  } else if (precision() != other.precision()) {
    mpfr_set_prec(value_, other.precision());
  }
  mpfr_set(value_, other.value_, MPFR_RNDN);
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  std::swap(value_[0], other.value_[0]);
  return *this;
}

Real::~Real() {
  if (value_[0]._mpfr_d != nullptr) mpfr_clear(value_);
}

namespace {

mpfr_prec_t joint(const RealBound& a, const RealBound& b) {
  return std::max(a.precision(), b.precision());
}

void ensure_precision(Real& r, mpfr_prec_t prec) {
  if (r.precision() < prec) mpfr_prec_round(r.get(), prec, MPFR_RNDN);
}

}  // namespace

RealBound::RealBound(mpfr_prec_t prec) : lower_(prec), upper_(prec) {}

RealBound::RealBound(double value, mpfr_prec_t prec) : lower_(prec), upper_(prec) {
  mpfr_set_d(lower_.get(), value, MPFR_RNDD);
  mpfr_set_d(upper_.get(), value, MPFR_RNDU);
}

RealBound::RealBound(const Real& lower, const Real& upper) : lower_(lower), upper_(upper) {
  const mpfr_prec_t p = std::max(lower.precision(), upper.precision());
  if (lower_.precision() != p) mpfr_prec_round(lower_.get(), p, MPFR_RNDD);
  if (upper_.precision() != p) mpfr_prec_round(upper_.get(), p, MPFR_RNDU);
}

RealBound RealBound::from_rational(const Rational& q, mpfr_prec_t prec) {
  RealBound b(prec);
  mpfr_set_q(b.lower_.get(), q.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(b.upper_.get(), q.get_mpq_t(), MPFR_RNDU);
  return b;
}

RealBound RealBound::from_integer(const Integer& z, mpfr_prec_t prec) {
  RealBound b(prec);
  mpfr_set_z(b.lower_.get(), z.get_mpz_t(), MPFR_RNDD);
  mpfr_set_z(b.upper_.get(), z.get_mpz_t(), MPFR_RNDU);
  return b;
}

RealBound RealBound::dyadic(const Integer& k, long exponent, mpfr_prec_t prec) {
  RealBound b(prec);
  mpfr_set_z_2exp(b.lower_.get(), k.get_mpz_t(), exponent, MPFR_RNDD);
  mpfr_set_z_2exp(b.upper_.get(), k.get_mpz_t(), exponent, MPFR_RNDU);
  return b;
}

RealBound RealBound::between(double lo, double hi, mpfr_prec_t prec) {
  RealBound b(prec);
  mpfr_set_d(b.lower_.get(), lo, MPFR_RNDD);
  mpfr_set_d(b.upper_.get(), hi, MPFR_RNDU);
  if (mpfr_greater_p(b.lower_.get(), b.upper_.get())) throw Error("RealBound: lower > upper");
  return b;
}

RealBound RealBound::at_least(double lo, mpfr_prec_t prec) {
  RealBound b(prec);
  mpfr_set_d(b.lower_.get(), lo, MPFR_RNDD);
  mpfr_set_inf(b.upper_.get(), 1);
  return b;
}

double RealBound::mid_d() const {
  if (mpfr_inf_p(upper_.get()) || mpfr_inf_p(lower_.get())) {
    return mpfr_inf_p(upper_.get()) && mpfr_inf_p(lower_.get()) ? 0.0
           : mpfr_inf_p(upper_.get())                          ? std::numeric_limits<double>::infinity()
                                                               : -std::numeric_limits<double>::infinity();
  }
  Real m(precision() + 1);
  mpfr_add(m.get(), lower_.get(), upper_.get(), MPFR_RNDN);
  mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
  return m.to_double();
}

double RealBound::width_d() const {
  Real w(precision());
  mpfr_sub(w.get(), upper_.get(), lower_.get(), MPFR_RNDU);
  return w.to_double(MPFR_RNDU);
}

RealBound RealBound::midpoint() const {
  RealBound m(precision() + 1);
  mpfr_add(m.lower_.get(), lower_.get(), upper_.get(), MPFR_RNDN);
  mpfr_div_2ui(m.lower_.get(), m.lower_.get(), 1, MPFR_RNDN);
  mpfr_set(m.upper_.get(), m.lower_.get(), MPFR_RNDN);
  return m;
}

bool RealBound::is_finite() const {
  return mpfr_number_p(lower_.get()) && mpfr_number_p(upper_.get());
}

bool RealBound::contains(double x) const {
  return mpfr_cmp_d(lower_.get(), x) <= 0 && mpfr_cmp_d(upper_.get(), x) >= 0;
}

bool RealBound::contains(const Rational& q) const {
  return mpfr_cmp_q(lower_.get(), q.get_mpq_t()) <= 0 && mpfr_cmp_q(upper_.get(), q.get_mpq_t()) >= 0;
}

bool RealBound::contains(const RealBound& other) const {
  return mpfr_lessequal_p(lower_.get(), other.lower_.get()) &&
         mpfr_greaterequal_p(upper_.get(), other.upper_.get());
}

bool RealBound::overlaps(const RealBound& other) const {
  return mpfr_lessequal_p(lower_.get(), other.upper_.get()) &&
         mpfr_lessequal_p(other.lower_.get(), upper_.get());
}

bool RealBound::certainly_less(const RealBound& other) const {
  return mpfr_less_p(upper_.get(), other.lower_.get()) != 0;
}

bool RealBound::certainly_less_equal(const RealBound& other) const {
  return mpfr_lessequal_p(upper_.get(), other.lower_.get()) != 0;
}

RealBound& RealBound::operator+=(const RealBound& rhs) {
  const mpfr_prec_t p = joint(*this, rhs);
  ensure_precision(lower_, p);
  ensure_precision(upper_, p);
  mpfr_add(lower_.get(), lower_.get(), rhs.lower_.get(), MPFR_RNDD);
  mpfr_add(upper_.get(), upper_.get(), rhs.upper_.get(), MPFR_RNDU);
  return *this;
}

RealBound& RealBound::operator-=(const RealBound& rhs) {
  const mpfr_prec_t p = joint(*this, rhs);
  ensure_precision(lower_, p);
  ensure_precision(upper_, p);
  if (this == &rhs) {
    RealBound copy = rhs;
    return *this -= copy;
  }
  mpfr_sub(lower_.get(), lower_.get(), rhs.upper_.get(), MPFR_RNDD);
  mpfr_sub(upper_.get(), upper_.get(), rhs.lower_.get(), MPFR_RNDU);
  return *this;
}

RealBound& RealBound::operator*=(const RealBound& rhs) {
  const mpfr_prec_t p = joint(*this, rhs);
  const bool a_nonneg = certainly_nonnegative();
  const bool b_nonneg = rhs.certainly_nonnegative();
  if (a_nonneg && b_nonneg) {
    ensure_precision(lower_, p);
    ensure_precision(upper_, p);
    mpfr_mul(lower_.get(), lower_.get(), rhs.lower_.get(), MPFR_RNDD);
    mpfr_mul(upper_.get(), upper_.get(), rhs.upper_.get(), MPFR_RNDU);
    return *this;
  }
  // General case: extremes among the four endpoint products.
  Real lo(p), hi(p), t(p);
  mpfr_set_inf(lo.get(), 1);
  mpfr_set_inf(hi.get(), -1);
  const mpfr_srcptr as[2] = {lower_.get(), upper_.get()};
  const mpfr_srcptr bs[2] = {rhs.lower_.get(), rhs.upper_.get()};
  for (auto a : as) {
    for (auto b : bs) {
      // 0 * inf is treated as 0: the operands are bounds, not values.
      if ((mpfr_zero_p(a) && mpfr_inf_p(b)) || (mpfr_inf_p(a) && mpfr_zero_p(b))) {
        mpfr_set_zero(t.get(), 1);
        mpfr_min(lo.get(), lo.get(), t.get(), MPFR_RNDD);
        mpfr_max(hi.get(), hi.get(), t.get(), MPFR_RNDU);
        continue;
      }
      mpfr_mul(t.get(), a, b, MPFR_RNDD);
      mpfr_min(lo.get(), lo.get(), t.get(), MPFR_RNDD);
      mpfr_mul(t.get(), a, b, MPFR_RNDU);
      mpfr_max(hi.get(), hi.get(), t.get(), MPFR_RNDU);
    }
  }
  lower_ = std::move(lo);
  upper_ = std::move(hi);
  return *this;
}

RealBound& RealBound::operator/=(const RealBound& rhs) {
  if (mpfr_sgn(rhs.lower_.get()) <= 0 && mpfr_sgn(rhs.upper_.get()) >= 0) {
    throw Error("RealBound: division by a bound containing zero");
  }
  const mpfr_prec_t p = joint(*this, rhs);
  Real lo(p), hi(p), t(p);
  mpfr_set_inf(lo.get(), 1);
  mpfr_set_inf(hi.get(), -1);
  const mpfr_srcptr as[2] = {lower_.get(), upper_.get()};
  const mpfr_srcptr bs[2] = {rhs.lower_.get(), rhs.upper_.get()};
  for (auto a : as) {
    for (auto b : bs) {
      mpfr_div(t.get(), a, b, MPFR_RNDD);
      mpfr_min(lo.get(), lo.get(), t.get(), MPFR_RNDD);
      mpfr_div(t.get(), a, b, MPFR_RNDU);
      mpfr_max(hi.get(), hi.get(), t.get(), MPFR_RNDU);
    }
  }
  lower_ = std::move(lo);
  upper_ = std::move(hi);
  return *this;
}

RealBound RealBound::operator-() const {
  RealBound r(precision());
  mpfr_neg(r.lower_.get(), upper_.get(), MPFR_RNDD);
  mpfr_neg(r.upper_.get(), lower_.get(), MPFR_RNDU);
  return r;
}

RealBound RealBound::scaled(long e) const {
  RealBound r(precision());
  mpfr_mul_2si(r.lower_.get(), lower_.get(), e, MPFR_RNDD);
  mpfr_mul_2si(r.upper_.get(), upper_.get(), e, MPFR_RNDU);
  return r;
}

RealBound RealBound::with_precision(mpfr_prec_t prec) const {
  RealBound r(prec);
  mpfr_set(r.lower_.get(), lower_.get(), MPFR_RNDD);
  mpfr_set(r.upper_.get(), upper_.get(), MPFR_RNDU);
  return r;
}

std::string RealBound::to_string(int digits) const {
  char* lo = nullptr;
  char* hi = nullptr;
  mpfr_asprintf(&lo, "%.*RDg", digits, lower_.get());
  mpfr_asprintf(&hi, "%.*RUg", digits, upper_.get());
  std::string out = std::string("[") + lo + ", " + hi + "]";
  mpfr_free_str(lo);
  mpfr_free_str(hi);
  return out;
}

std::ostream& operator<<(std::ostream& os, const RealBound& b) { return os << b.to_string(); }

RealBound abs(const RealBound& x) {
  if (x.certainly_nonnegative()) return x;
  if (mpfr_sgn(x.upper().get()) <= 0) return -x;
  RealBound r(x.precision());
  mpfr_set_zero(r.lower().get(), 1);
  mpfr_neg(r.upper().get(), x.lower().get(), MPFR_RNDU);
  mpfr_max(r.upper().get(), r.upper().get(), x.upper().get(), MPFR_RNDU);
  return r;
}

RealBound sqr(const RealBound& x) {
  RealBound a = abs(x);
  return a * a;
}

RealBound min(const RealBound& a, const RealBound& b) {
  RealBound r(joint(a, b));
  mpfr_min(r.lower().get(), a.lower().get(), b.lower().get(), MPFR_RNDD);
  mpfr_min(r.upper().get(), a.upper().get(), b.upper().get(), MPFR_RNDU);
  return r;
}

RealBound max(const RealBound& a, const RealBound& b) {
  RealBound r(joint(a, b));
  mpfr_max(r.lower().get(), a.lower().get(), b.lower().get(), MPFR_RNDD);
  mpfr_max(r.upper().get(), a.upper().get(), b.upper().get(), MPFR_RNDU);
  return r;
}

RealBound hull(const RealBound& a, const RealBound& b) {
  RealBound r(joint(a, b));
  mpfr_min(r.lower().get(), a.lower().get(), b.lower().get(), MPFR_RNDD);
  mpfr_max(r.upper().get(), a.upper().get(), b.upper().get(), MPFR_RNDU);
  return r;
}

RealBound intersect(const RealBound& a, const RealBound& b) {
  RealBound r(joint(a, b));
  mpfr_max(r.lower().get(), a.lower().get(), b.lower().get(), MPFR_RNDD);
  mpfr_min(r.upper().get(), a.upper().get(), b.upper().get(), MPFR_RNDU);
  if (mpfr_greater_p(r.lower().get(), r.upper().get())) throw Error("RealBound: empty intersection");
  return r;
}

RealBound exp2(const RealBound& x) {
  RealBound r(x.precision());
  mpfr_exp2(r.lower().get(), x.lower().get(), MPFR_RNDD);
  mpfr_exp2(r.upper().get(), x.upper().get(), MPFR_RNDU);
  return r;
}

RealBound log(const RealBound& x) {
  if (mpfr_sgn(x.lower().get()) < 0) throw OutOfDomain("log of a bound with negative members");
  RealBound r(x.precision());
  mpfr_log(r.lower().get(), x.lower().get(), MPFR_RNDD);
  mpfr_log(r.upper().get(), x.upper().get(), MPFR_RNDU);
  return r;
}

RealBound log2(const RealBound& x) {
  if (mpfr_sgn(x.lower().get()) < 0) throw OutOfDomain("log2 of a bound with negative members");
  RealBound r(x.precision());
  mpfr_log2(r.lower().get(), x.lower().get(), MPFR_RNDD);
  mpfr_log2(r.upper().get(), x.upper().get(), MPFR_RNDU);
  return r;
}

RealBound pow(const RealBound& base, const RealBound& exponent) {
  if (!base.certainly_positive()) throw OutOfDomain("pow needs a positive base");
  return exp2(exponent * log2(base));
}

RealBound clamp(const RealBound& x, const RealBound& lo, const RealBound& hi) {
  return min(max(x, lo), hi);
}

}  // namespace knopp
