#include "knopp/extrema.hpp"

#include <algorithm>
#include <cmath>

#include "knopp/error.hpp"

namespace knopp {

DyadicInterval::DyadicInterval(Integer k_, std::size_t N_) : k(std::move(k_)), N(N_) {
  if (k < 0 || k >= (Integer(1) << N)) throw OutOfDomain("dyadic interval index out of range");
}

Rational DyadicInterval::left() const {
  Rational q(k, Integer(1) << N);
  q.canonicalize();
  return q;
}

Rational DyadicInterval::right() const {
  Rational q(k + 1, Integer(1) << N);
  q.canonicalize();
  return q;
}

TPoly dyadic_value_poly(const Integer& K, std::size_t N) {
  std::vector<Rational> c(N);
  Integer f;
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t m = N - j;
    mpz_fdiv_r_2exp(f.get_mpz_t(), K.get_mpz_t(), m);
    const Integer full = Integer(1) << m;
    const Integer g = full - f;
    c[j] = Rational(f <= g ? f : g, full);
    c[j].canonicalize();
  }
  return TPoly(std::move(c));
}

TPoly dyadic_slope_poly(const Integer& K, std::size_t N) {
  std::vector<Rational> c(N);
  for (std::size_t j = 0; j < N; ++j) {
    Integer p2 = Integer(1) << j;
    c[j] = mpz_tstbit(K.get_mpz_t(), N - 1 - j) ? Rational(-p2) : Rational(p2);
  }
  return TPoly(std::move(c));
}

IntervalMin min_on_interval(const DyadicInterval& I, const Alpha& alpha) {
  const TPoly a = dyadic_value_poly(I.k, I.N);
  const TPoly b = dyadic_value_poly(I.k + 1, I.N);
  if (alpha.sign_at_t(b - a) < 0) return {I.right(), b};
  return {I.left(), a};
}

namespace {

Rational third_over(std::size_t N, int v) {
  Rational q(v, 3 * (Integer(1) << N));
  q.canonicalize();
  return q;
}

std::vector<Rational> mirrored(std::vector<Rational> xs) {
  for (auto& x : xs) x = 1 - x;
  std::sort(xs.begin(), xs.end());
  return xs;
}

// sign(p - theta_M) for p = P / t_slope^N, after clearing the positive factor
// t_slope^N (t_slope - 1): P (2t - 1) + 2^N t^N (2^M t^M - 1).
int compare_to_threshold(const SlopeArgument& p, std::size_t M, const Alpha& alpha) {
  TPoly q = p.numerator * TPoly({Rational(-1), Rational(2)});
  TPoly bracket = TPoly::monomial(M, Rational(Integer(1) << M)) - TPoly::constant(1);
  q += bracket.shifted(p.N) * Rational(Integer(1) << p.N);
  return alpha.sign_at_t(q);
}

constexpr std::size_t kThresholdScan = 4096;

}  // namespace

std::vector<Rational> maxima_positions(const SlopeArgument& p, const Alpha& alpha) {
  const int s = alpha.sign_at_t(p.numerator);
  if (s > 0) return mirrored(maxima_positions(SlopeArgument{-p.numerator, p.N}, alpha));
  if (s == 0) return {Rational(1, 3), Rational(2, 3)};
  // p < 0 = theta_0: find the first threshold at or below p.
  for (std::size_t M = 1; M < kThresholdScan; ++M) {
    const int c = compare_to_threshold(p, M, alpha);
    if (c == 0) return {third_over(M, 1), third_over(M, 2)};
    if (c > 0) return {third_over(M - 1, 1)};
  }
  throw ThresholdAmbiguity("slope argument below every scanned threshold");
}

std::vector<Rational> maxima_positions(const RealBound& p, const Alpha& alpha) {
  if (p.is_point()) {
    // An MPFR value is an exact dyadic rational.
    mpq_class q;
    mpfr_get_q(q.get_mpq_t(), p.lower().get());
    return maxima_positions(SlopeArgument{TPoly::constant(q), 0}, alpha);
  }
  const KnoppTables tables(alpha, p.precision(), 4);
  const bool positive = p.certainly_positive();
  const RealBound q = positive ? -p : p;
  if (!q.certainly_negative()) {
    throw ThresholdAmbiguity("bound on p contains the threshold 0");
  }
  std::vector<Rational> out;
  for (std::size_t M = 1; M < kThresholdScan; ++M) {
    const RealBound th = tables.threshold(M);
    if (th.certainly_less(q)) {
      out = {third_over(M - 1, 1)};
      break;
    }
    if (q.overlaps(th)) throw ThresholdAmbiguity("bound on p straddles threshold " + std::to_string(M));
  }
  if (out.empty()) throw ThresholdAmbiguity("slope argument below every scanned threshold");
  return positive ? mirrored(out) : out;
}

RealBound max_value(const RealBound& p, const Alpha& alpha) {
  const KnoppTables tables(alpha, std::max<mpfr_prec_t>(p.precision(), kDefaultPrecision), 4);
  return tables.max_value(p);
}

RealBound max_on_interval(const DyadicInterval& I, const Alpha& alpha, mpfr_prec_t prec) {
  const KnoppTables tables(alpha, prec, I.N + 1);
  const RealBound Fa = tables.dyadic_value(I.k, I.N);
  const RealBound p = tables.dyadic_slope(I.k, I.N) / tables.slope_pow(I.N);
  return Fa + tables.scale_pow(I.N) * tables.max_value(p);
}

std::vector<Rational> argmax_on_interval(const DyadicInterval& I, const Alpha& alpha) {
  const auto unit = maxima_positions(SlopeArgument{dyadic_slope_poly(I.k, I.N), I.N}, alpha);
  std::vector<Rational> out;
  const Rational w(1, Integer(1) << I.N);
  for (const auto& u : unit) {
    Rational x = I.left() + u * w;
    x.canonicalize();
    out.push_back(x);
  }
  return out;
}

std::string to_string(ExtremumKind k) {
  switch (k) {
    case ExtremumKind::LocalMin: return "LocalMin";
    case ExtremumKind::LocalMax: return "LocalMax";
    case ExtremumKind::GlobalMin: return "GlobalMin";
    case ExtremumKind::GlobalMax: return "GlobalMax";
    case ExtremumKind::NotExtremum: return "NotExtremum";
  }
  return "?";
}

ExtremumReport classify_extremum(const DigitStream& x, const Alpha& alpha) {
  const MembershipResult m = classify_membership(x);
  ExtremumReport r{ExtremumKind::NotExtremum, {}, RealBound(), m.kind, m.kind == Membership::Unknown};
  const auto q = x.exact_value();
  try {
    r.value = eval_F(x, alpha, 1e-12);
  } catch (const DepthExceeded&) {
    // Truncated digits: F over the cylinder they leave open.
    const std::size_t D = x.depth().value_or(0);
    r.value = enclosure_at_depth(x, D, KnoppTables(alpha, kDefaultPrecision, D + 2));
  }
  switch (m.kind) {
    case Membership::Dyadic:
      if (*q == 0 || *q == 1) {
        r.kind = ExtremumKind::GlobalMin;
        r.locations = {Rational(0), Rational(1)};
      } else {
        r.kind = ExtremumKind::LocalMin;
        r.locations = {*q};
      }
      break;
    case Membership::MaximaSet:
      if (*q == Rational(1, 3) || *q == Rational(2, 3)) {
        r.kind = ExtremumKind::GlobalMax;
        r.locations = {Rational(1, 3), Rational(2, 3)};
      } else {
        r.kind = ExtremumKind::LocalMax;
        r.locations = {*q};
      }
      break;
    case Membership::Neither:
    case Membership::Unknown:
      break;
  }
  return r;
}

}  // namespace knopp
