#pragma once

// The Takagi-Knopp function F(x) = sum_j 2^(-alpha j) Lambda(2^j x): exact
// partial sums and slopes, certified evaluation, and the per-precision tables
// (powers of t, maxima candidates) shared by the extrema and geometry code.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "knopp/digits.hpp"
#include "knopp/real_bound.hpp"
#include "knopp/tpoly.hpp"

namespace knopp {

/// Exponent alpha in (0, 1), held as an exact rational so that t = 2^-alpha
/// is algebraic with a known minimal polynomial.
class Alpha {
 public:
  explicit Alpha(const Rational& alpha);
  /// Uses the shortest decimal that round-trips `alpha` (0.3 means 3/10).
  explicit Alpha(double alpha);

  const Rational& exact() const { return alpha_; }
  double value() const { return value_; }
  /// t_scale = 2^-alpha, the series ratio.
  RealBound t_scale(mpfr_prec_t prec = kDefaultPrecision) const;
  /// t_slope = 2^(1-alpha) = 2 t_scale, the slope base.
  RealBound t_slope(mpfr_prec_t prec = kDefaultPrecision) const;
  double t_scale_d() const { return t_scale_d_; }
  double t_slope_d() const { return 2 * t_scale_d_; }

  /// Exact sign of P(t_scale) for a polynomial with rational coefficients.
  /// P is reduced modulo the minimal polynomial t^b - 2^-a of 2^(-a/b), so a
  /// zero result is certain; otherwise precision grows until the sign is.
  int sign_at_t(const TPoly& p) const;

 private:
  Rational alpha_;
  double value_;
  double t_scale_d_;
};

/// Lambda(x) = min(x, 1 - x) on [0, 1].
Rational lambda(const Rational& x);

/// F_n(x) = sum_{j<=n} t^j Lambda(tau^j x). Exact for finite-dyadic and
/// periodic streams; other streams use Lambda of digits j+1 .. j+guard, which
/// is within 2^-guard of the true coefficient.
TPoly partial_sum_value(const DigitStream& x, std::size_t n, std::size_t guard = kDefaultPrecision);

/// C_n(x) = sum_{j<=n} (-1)^i_{j+1} 2^j t^j, the slope of F_n near x.
TPoly slope(const DigitStream& x, std::size_t n);
RealBound slope_value(const DigitStream& x, std::size_t n, const Alpha& alpha, mpfr_prec_t prec = kDefaultPrecision);

/// T(n) = t^(n+1) / (2 (1 - t)), so that 0 <= F - F_n <= T(n).
RealBound tail_bound(std::size_t n, const Alpha& alpha, mpfr_prec_t prec = kDefaultPrecision);

/// Powers of t_scale and t_slope plus the maxima candidates V_N = F(1/(3 2^N)),
/// all at one working precision. Immutable once built.
class KnoppTables {
 public:
  KnoppTables(const Alpha& alpha, mpfr_prec_t prec, std::size_t n_max);

  const Alpha& alpha() const { return alpha_; }
  mpfr_prec_t precision() const { return prec_; }
  std::size_t n_max() const { return ts_.size() - 1; }

  const RealBound& scale_pow(std::size_t n) const;  // t_scale^n
  const RealBound& slope_pow(std::size_t n) const;  // t_slope^n
  /// F(1/3) = 1 / (3 (1 - t)).
  const RealBound& global_max() const { return fmax_; }
  /// Integral of F over [0, 1] = 1 / (4 (1 - t)).
  const RealBound& mean() const { return mean_; }
  /// -(t_slope^N - 1) / (t_slope - 1)
  RealBound threshold(std::size_t N) const;
  /// F(1 / (3 2^N)).
  RealBound candidate(std::size_t N) const;

  /// M(p) = max_x F(x) + p x, for every p in the bound.
  RealBound max_value(const RealBound& p) const;

  /// F(K / 2^N), exact up to rounding.
  RealBound dyadic_value(const Integer& K, std::size_t N) const;
  /// C_{N-1} on [K / 2^N, (K+1) / 2^N].
  RealBound dyadic_slope(const Integer& K, std::size_t N) const;

 private:
  RealBound max_value_point(const Real& p) const;
  std::size_t optimal_index(double q) const;

  Alpha alpha_;
  mpfr_prec_t prec_;
  std::vector<RealBound> ts_;
  std::vector<RealBound> tl_;
  std::vector<RealBound> cand_;
  RealBound fmax_;
  RealBound mean_;
  RealBound third_;
};

/// F over the level-D dyadic interval holding x: [F(a) + min(0, C w), F(a) + max(0, C w) + t^D F(1/3)].
RealBound enclosure_at_depth(const DigitStream& x, std::size_t D, const KnoppTables& tables);

/// Bracket of F(x) no wider than `eps`. Finite dyadics are finite sums;
/// periodic points use the closed form of the periodic tail; other streams are
/// bracketed on a dyadic interval deep enough to meet `eps`.
RealBound eval_F(const DigitStream& x, const Alpha& alpha, double eps = 1e-30);

/// F(x) for exact rationals at a fixed precision (no width target).
RealBound eval_F_exact(const DigitStream& x, const KnoppTables& tables);

struct HolderProbe {
  double constant;
  double worst_x;
  double worst_y;
  std::size_t pairs;
};

/// max |F(x) - F(y)| / |x - y|^alpha over random dyadic pairs at all scales.
HolderProbe holder_probe(const Alpha& alpha, std::size_t pair_count, std::uint64_t seed);

/// d_n = sum_{j=0}^{n} (-1)^j q^{j+1} as a polynomial in q = 2^-(1-alpha).
TPoly d_sequence(std::size_t n);

}  // namespace knopp
