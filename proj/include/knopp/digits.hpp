#pragma once

// Binary-digit views of points of [0, 1]: the shift operator, the two
// approximation-rate machines (by dyadics and by abscissas of local maxima),
// and explicit constructions of points with prescribed rates.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "knopp/real_bound.hpp"

namespace knopp {

using Bit = std::uint8_t;

enum class DyadicConvention { TerminatingZeros, TerminatingOnes };

/// Digit pattern of a run inside a rule-based stream.
enum class RunPattern : std::uint8_t { Zeros, Ones, OnesAtEven, OnesAtOdd };

struct DigitRun {
  std::uint64_t start;  // first digit index (1-based) covered by this run
  RunPattern pattern;
};

/// A pair of scales (J, J') bracketing a long run: the stream agrees with a
/// structured approximant from digit J+1 up to digit J'.
struct ScalePair {
  std::uint64_t start;
  std::uint64_t end;
};

/// Scales at which a constructed point is unusually close to a dyadic
/// (`dyadic`) or to an abscissa of a local maximum (`maxima`).
struct RuleSchedule {
  std::vector<ScalePair> dyadic;
  std::vector<ScalePair> maxima;
};

enum class Membership { Dyadic, MaximaSet, Neither, Unknown };

struct MembershipResult {
  Membership kind;
  std::size_t depth = 0;  // meaningful for Unknown only
};

std::string to_string(Membership m);

/// Immutable source of binary digits i_1, i_2, ... of a point x in [0, 1].
///
/// Four representations are supported: finite dyadics (with either of their
/// two expansions), eventually periodic expansions, rule-based expansions
/// defined by a table of digit runs, and truncated expansions that refuse
/// queries past their depth. Shifting is O(1) and shares the source.
class DigitStream {
 public:
  enum class Kind { FiniteDyadic, EventuallyPeriodic, RuleBased, Truncated };

  /// K / 2^N with 0 <= K <= 2^N. The fraction is reduced first; x = 1 always
  /// uses the all-ones expansion and x = 0 the all-zeros one.
  static DigitStream finite_dyadic(const Integer& K, unsigned N,
                                   DyadicConvention convention = DyadicConvention::TerminatingZeros);
  static DigitStream periodic(std::vector<Bit> preamble, std::vector<Bit> period);
  static DigitStream truncated(std::vector<Bit> digits);
  /// P/Q in [0, 1] by base-2 long division (period length < Q).
  static DigitStream from_rational(const Rational& q);
  static DigitStream rule_based(std::vector<DigitRun> runs, std::uint64_t depth_limit, RuleSchedule schedule,
                                Membership membership, std::string label);

  Kind kind() const;
  /// i_l for l >= 1.
  Bit digit(std::size_t l) const;
  /// Largest l with a certified digit, or nullopt when unlimited.
  std::optional<std::size_t> depth() const;
  std::size_t offset() const { return offset_; }
  DigitStream shifted(std::size_t j) const;

  /// Exact value for finite-dyadic and eventually periodic streams.
  std::optional<Rational> exact_value() const;
  /// Exact value of tau^j x when the stream is exact.
  std::optional<Rational> exact_tail(std::size_t j) const;
  bool is_exact() const;
  /// (preamble length, period length) of an eventually periodic stream,
  /// measured from the current offset. The period need not be minimal.
  std::optional<std::pair<std::size_t, std::size_t>> cycle() const;

  /// Bracket of tau^j x from digits j+1 .. j+guard (exact streams are tight).
  RealBound tail_value(std::size_t j, mpfr_prec_t prec = kDefaultPrecision) const;
  RealBound value(mpfr_prec_t prec = kDefaultPrecision) const { return tail_value(0, prec); }
  /// Integer whose binary digits are i_1 .. i_j.
  Integer prefix(std::size_t j) const;

  /// Rule-based streams only; scales already account for any shift.
  std::optional<RuleSchedule> schedule() const;
  /// Membership known from construction (rule-based streams).
  std::optional<Membership> known_membership() const;
  std::string describe() const;

  struct Source;

 private:
  DigitStream(std::shared_ptr<const Source> source, std::size_t offset)
      : source_(std::move(source)), offset_(offset) {}

  std::shared_ptr<const Source> source_;
  std::size_t offset_ = 0;
};

// -- module operations ------------------------------------------------------

Bit digit(const DigitStream& x, std::size_t l);
DigitStream shift(const DigitStream& x, std::size_t j);
MembershipResult classify_membership(const DigitStream& x);

/// Lambda(u) = min(u, 1-u) applied to every member of a bound in [0, 1].
RealBound tent(const RealBound& u);

struct NearestDyadic {
  Integer K;  // numerator of K / 2^j
  RealBound distance;
};

struct NearestMaximum {
  Rational location;
  RealBound distance;
};

NearestDyadic nearest_dyadic(const DigitStream& x, std::size_t j, mpfr_prec_t prec = kDefaultPrecision);
NearestMaximum nearest_maxima_point(const DigitStream& x, std::size_t j, mpfr_prec_t prec = kDefaultPrecision);

enum class RateKind { Dyadic, Maxima };

struct RateEntry {
  std::size_t scale;
  RealBound distance;
  RealBound ratio;  // log(distance) / log(2^-scale); upper end +inf at distance 0
};

/// Tail-window summary of a rate trace. `infinite` marks an exact hit
/// (distance 0) somewhere in the window.
struct RateSummary {
  double estimate = 0;
  double lo = 0;
  double hi = 0;
  std::size_t window = 0;
  bool infinite = false;
};

struct ApproxRateTrace {
  RateKind kind;
  std::vector<RateEntry> entries;
  RateSummary limsup;
};

ApproxRateTrace rate_trace(const DigitStream& x, RateKind kind, std::size_t j_max,
                           mpfr_prec_t prec = kDefaultPrecision);

/// Prescribed approximation rates; at least one must be set, each > 1.
struct RateTargets {
  std::optional<Rational> dyadic_rate;
  std::optional<Rational> maxima_rate;
};

/// Digits beyond this index are not tabulated for constructed points.
inline constexpr std::uint64_t kRuleDepthLimit = std::uint64_t{1} << 24;

DigitStream construct_point(const RateTargets& targets);

/// Parses `dyadic:K/2^N`, `rational:P/Q`, `smax:N:K:v`, `rule:r=U[,s=S]`,
/// `rule:s=S` and `bits:0.b1b2...bn`.
DigitStream parse_point(std::string_view spec);
/// Exact decimal literal such as "2" or "1.25".
Rational parse_decimal(std::string_view text, std::size_t offset = 0);

}  // namespace knopp
