#pragma once

// Extrema of F: exact minima on dyadic intervals, the maxima positions X(p)
// and values M(p) of x -> F(x) + p x, and point classification.

#include <cstddef>
#include <string>
#include <vector>

#include "knopp/digits.hpp"
#include "knopp/knopp.hpp"

namespace knopp {

/// [k / 2^N, (k+1) / 2^N] with 0 <= k < 2^N.
struct DyadicInterval {
  Integer k;
  std::size_t N;

  DyadicInterval(Integer k_, std::size_t N_);
  Rational left() const;
  Rational right() const;
};

/// F(K / 2^N) as a polynomial in t (finite sum of N terms).
TPoly dyadic_value_poly(const Integer& K, std::size_t N);
/// Slope C_{N-1} on [K / 2^N, (K+1) / 2^N] as a polynomial in t.
TPoly dyadic_slope_poly(const Integer& K, std::size_t N);

struct IntervalMin {
  Rational location;
  TPoly value;
};

/// The smaller endpoint value; ties go to the left endpoint.
IntervalMin min_on_interval(const DyadicInterval& I, const Alpha& alpha);

/// p = numerator(t) / t_slope^N, the form taken by rescaled slopes.
struct SlopeArgument {
  TPoly numerator;
  std::size_t N = 0;
};

/// X(p): the maximisers of F(x) + p x on [0, 1]. Exact for slope arguments.
std::vector<Rational> maxima_positions(const SlopeArgument& p, const Alpha& alpha);
/// Numeric p; point bounds are exact dyadic rationals and go through the
/// exact path. Throws ThresholdAmbiguity when a wide bound straddles a threshold.
std::vector<Rational> maxima_positions(const RealBound& p, const Alpha& alpha);

/// M(p) = max_x F(x) + p x.
RealBound max_value(const RealBound& p, const Alpha& alpha);

/// F(k / 2^N) + t^N M(C_{N-1} / t_slope^N).
RealBound max_on_interval(const DyadicInterval& I, const Alpha& alpha, mpfr_prec_t prec = kDefaultPrecision);
/// The abscissas where that maximum is attained.
std::vector<Rational> argmax_on_interval(const DyadicInterval& I, const Alpha& alpha);

enum class ExtremumKind { LocalMin, LocalMax, GlobalMin, GlobalMax, NotExtremum };
std::string to_string(ExtremumKind k);

struct ExtremumReport {
  ExtremumKind kind;
  std::vector<Rational> locations;  // global extrema report both abscissas
  RealBound value;
  Membership membership;
  bool unknown = false;  // membership could not be decided
};

ExtremumReport classify_extremum(const DigitStream& x, const Alpha& alpha);

}  // namespace knopp
