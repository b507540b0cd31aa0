#include "knopp/digits.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "knopp/error.hpp"

namespace knopp {

struct DigitStream::Source {
  Kind kind;

  // FiniteDyadic: x = K / 2^N (reduced); digits of `body` over N places, then `tail` forever.
  Integer K;
  unsigned N = 0;
  DyadicConvention convention = DyadicConvention::TerminatingZeros;
  Integer body;
  Bit tail = 0;

  // EventuallyPeriodic
  std::vector<Bit> preamble;
  std::vector<Bit> period;

  // Truncated
  std::vector<Bit> bits;

  // RuleBased
  std::vector<DigitRun> runs;
  std::uint64_t limit = 0;
  RuleSchedule schedule;
  Membership membership = Membership::Unknown;
  std::string label;

  Bit digit(std::uint64_t l) const {
    switch (kind) {
      case Kind::FiniteDyadic:
        if (l > N) return tail;
        return static_cast<Bit>(mpz_tstbit(body.get_mpz_t(), N - l));
      case Kind::EventuallyPeriodic:
        if (l <= preamble.size()) return preamble[l - 1];
        return period[(l - 1 - preamble.size()) % period.size()];
      case Kind::Truncated:
        if (l > bits.size()) throw DepthExceeded(l, bits.size());
        return bits[l - 1];
      case Kind::RuleBased: {
        if (l > limit) throw DepthExceeded(l, limit);
        auto it = std::upper_bound(runs.begin(), runs.end(), l,
                                   [](std::uint64_t v, const DigitRun& r) { return v < r.start; });
        if (it == runs.begin()) return 0;
        switch (std::prev(it)->pattern) {
          case RunPattern::Zeros: return 0;
          case RunPattern::Ones: return 1;
          case RunPattern::OnesAtEven: return static_cast<Bit>(l % 2 == 0);
          case RunPattern::OnesAtOdd: return static_cast<Bit>(l % 2 == 1);
        }
      }
    }
    return 0;
  }
};

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Dyadic: return "Dyadic";
    case Membership::MaximaSet: return "MaximaSet";
    case Membership::Neither: return "Neither";
    case Membership::Unknown: return "Unknown";
  }
  return "?";
}

namespace {

void check_bits(const std::vector<Bit>& v) {
  for (Bit b : v)
    if (b > 1) throw Error("digit must be 0 or 1");
}

// Integer with binary digits v[from], ..., v[to-1] (most significant first).
Integer bits_to_integer(const std::vector<Bit>& v, std::size_t from, std::size_t to) {
  Integer z = 0;
  for (std::size_t i = from; i < to; ++i) {
    z <<= 1;
    if (v[i]) z += 1;
  }
  return z;
}

Rational reduced(Rational q) {
  q.canonicalize();
  return q;
}

}  // namespace

DigitStream DigitStream::finite_dyadic(const Integer& K, unsigned N, DyadicConvention convention) {
  if (K < 0) throw OutOfDomain("dyadic numerator must be non-negative");
  Integer k = K;
  unsigned n = N;
  while (n > 0 && mpz_even_p(k.get_mpz_t()) && k != 0) {
    k >>= 1;
    --n;
  }
  if (k == 0) n = 0;
  if (k > (Integer(1) << n)) throw OutOfDomain("dyadic point exceeds 1");
  auto s = std::make_shared<Source>();
  s->kind = Kind::FiniteDyadic;
  s->K = k;
  s->N = n;
  if (k == 0) convention = DyadicConvention::TerminatingZeros;
  if (n == 0 && k == 1) convention = DyadicConvention::TerminatingOnes;
  s->convention = convention;
  if (convention == DyadicConvention::TerminatingZeros) {
    s->body = k;
    s->tail = 0;
  } else {
    s->body = k - 1;
    s->tail = 1;
  }
  return DigitStream(std::move(s), 0);
}

DigitStream DigitStream::periodic(std::vector<Bit> preamble, std::vector<Bit> period) {
  if (period.empty()) throw Error("period must be non-empty");
  check_bits(preamble);
  check_bits(period);
  auto s = std::make_shared<Source>();
  s->kind = Kind::EventuallyPeriodic;
  s->preamble = std::move(preamble);
  s->period = std::move(period);
  return DigitStream(std::move(s), 0);
}

DigitStream DigitStream::truncated(std::vector<Bit> digits) {
  check_bits(digits);
  auto s = std::make_shared<Source>();
  s->kind = Kind::Truncated;
  s->bits = std::move(digits);
  return DigitStream(std::move(s), 0);
}

DigitStream DigitStream::from_rational(const Rational& q_in) {
  const Rational q = reduced(q_in);
  if (q < 0 || q > 1) throw OutOfDomain("point must lie in [0, 1]");
  if (q == 1) return periodic({}, {1});
  const Integer& Q = q.get_den();
  // Q = 2^a * odd: a preamble digits, then a purely periodic part.
  const std::size_t a = mpz_scan1(Q.get_mpz_t(), 0);
  Integer odd = Q >> a;
  std::vector<Bit> pre;
  Integer r = q.get_num();
  for (std::size_t i = 0; i < a; ++i) {
    r <<= 1;
    if (r >= Q) {
      pre.push_back(1);
      r -= Q;
    } else {
      pre.push_back(0);
    }
  }
  // Now r / Q = r' / odd with r' = r / 2^a exactly.
  Integer rem = r >> a;
  if (rem == 0) return periodic(std::move(pre), {0});
  const Integer start = rem;
  std::vector<Bit> per;
  constexpr std::size_t kMaxPeriod = std::size_t{1} << 26;
  do {
    rem <<= 1;
    if (rem >= odd) {
      per.push_back(1);
      rem -= odd;
    } else {
      per.push_back(0);
    }
    if (per.size() > kMaxPeriod) throw Error("binary period too long for denominator " + Q.get_str());
  } while (rem != start);
  return periodic(std::move(pre), std::move(per));
}

DigitStream DigitStream::rule_based(std::vector<DigitRun> runs, std::uint64_t depth_limit, RuleSchedule schedule,
                                    Membership membership, std::string label) {
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].start <= runs[i - 1].start) throw Error("digit runs must have increasing starts");
  auto s = std::make_shared<Source>();
  s->kind = Kind::RuleBased;
  s->runs = std::move(runs);
  s->limit = depth_limit;
  s->schedule = std::move(schedule);
  s->membership = membership;
  s->label = std::move(label);
  return DigitStream(std::move(s), 0);
}

DigitStream::Kind DigitStream::kind() const { return source_->kind; }

Bit DigitStream::digit(std::size_t l) const {
  if (l == 0) throw OutOfDomain("digit index starts at 1");
  try {
    return source_->digit(l + offset_);
  } catch (const DepthExceeded& e) {
    throw DepthExceeded(l, e.depth() - offset_);
  }
}

std::optional<std::size_t> DigitStream::depth() const {
  switch (source_->kind) {
    case Kind::Truncated: return source_->bits.size() - offset_;
    case Kind::RuleBased: return source_->limit - offset_;
    default: return std::nullopt;
  }
}

DigitStream DigitStream::shifted(std::size_t j) const {
  if (j == 0) return *this;
  if (auto d = depth(); d && j >= *d) throw DepthExceeded(j, *d);
  return DigitStream(source_, offset_ + j);
}

bool DigitStream::is_exact() const {
  return source_->kind == Kind::FiniteDyadic || source_->kind == Kind::EventuallyPeriodic;
}

std::optional<std::pair<std::size_t, std::size_t>> DigitStream::cycle() const {
  if (source_->kind != Kind::EventuallyPeriodic) return std::nullopt;
  const std::size_t m = source_->preamble.size();
  return std::make_pair(m > offset_ ? m - offset_ : 0, source_->period.size());
}

std::optional<Rational> DigitStream::exact_value() const { return exact_tail(0); }

std::optional<Rational> DigitStream::exact_tail(std::size_t j_rel) const {
  const Source& s = *source_;
  const std::size_t j = j_rel + offset_;
  if (s.kind == Kind::FiniteDyadic) {
    if (j >= s.N) return Rational(s.tail);
    // Digits j+1..N of body followed by the tail.
    const unsigned m = s.N - static_cast<unsigned>(j);
    Integer low = s.body & ((Integer(1) << m) - 1);
    if (s.tail) low += 1;  // 0.b...b111... = (b + 1) / 2^m
    return reduced(Rational(low, Integer(1) << m));
  }
  if (s.kind == Kind::EventuallyPeriodic) {
    const std::size_t L = s.period.size();
    const std::size_t m = s.preamble.size();
    const Integer cycle = (Integer(1) << L) - 1;
    if (j >= m) {
      const std::size_t r = (j - m) % L;
      Integer rot = bits_to_integer(s.period, r, L);
      rot <<= r;
      rot += bits_to_integer(s.period, 0, r);
      return reduced(Rational(rot, cycle));
    }
    const Rational p(bits_to_integer(s.period, 0, L), cycle);
    const Rational head(bits_to_integer(s.preamble, j, m));
    return reduced((head + p) / Rational(Integer(1) << (m - j)));
  }
  return std::nullopt;
}

RealBound DigitStream::tail_value(std::size_t j, mpfr_prec_t prec) const {
  if (auto q = exact_tail(j)) return RealBound::from_rational(*q, prec);
  const std::size_t d = *depth();
  if (j > d) throw DepthExceeded(j, d);
  const std::size_t guard = static_cast<std::size_t>(prec);
  if (source_->kind == Kind::RuleBased && j + guard > d) throw DepthExceeded(j + guard, d);
  const std::size_t n = std::min(guard, d - j);
  Integer z = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    z <<= 1;
    if (digit(j + i)) z += 1;
  }
  const long e = -static_cast<long>(n);
  RealBound lo = RealBound::dyadic(z, e, prec + 2);
  RealBound hi = RealBound::dyadic(z + 1, e, prec + 2);
  return hull(lo, hi);
}

Integer DigitStream::prefix(std::size_t j) const {
  Integer z = 0;
  for (std::size_t i = 1; i <= j; ++i) {
    z <<= 1;
    if (digit(i)) z += 1;
  }
  return z;
}

std::optional<RuleSchedule> DigitStream::schedule() const {
  if (source_->kind != Kind::RuleBased) return std::nullopt;
  RuleSchedule out;
  auto rebase = [&](const std::vector<ScalePair>& in, std::vector<ScalePair>& dst) {
    for (const auto& p : in)
      if (p.start > offset_) dst.push_back({p.start - offset_, p.end - offset_});
  };
  rebase(source_->schedule.dyadic, out.dyadic);
  rebase(source_->schedule.maxima, out.maxima);
  return out;
}

std::optional<Membership> DigitStream::known_membership() const {
  if (source_->kind != Kind::RuleBased) return std::nullopt;
  return source_->membership;
}

std::string DigitStream::describe() const {
  const Source& s = *source_;
  std::ostringstream os;
  switch (s.kind) {
    case Kind::FiniteDyadic:
      os << "dyadic " << s.K << "/2^" << s.N
         << (s.convention == DyadicConvention::TerminatingOnes ? " (ones)" : "");
      break;
    case Kind::EventuallyPeriodic: {
      os << "periodic 0.";
      for (Bit b : s.preamble) os << int(b);
      os << "(";
      for (Bit b : s.period) os << int(b);
      os << ")";
      break;
    }
    case Kind::Truncated: os << "truncated depth " << s.bits.size(); break;
    case Kind::RuleBased: os << "rule " << s.label; break;
  }
  if (offset_ > 0) os << " shifted by " << offset_;
  return os.str();
}

Bit digit(const DigitStream& x, std::size_t l) { return x.digit(l); }

DigitStream shift(const DigitStream& x, std::size_t j) { return x.shifted(j); }

MembershipResult classify_membership(const DigitStream& x) {
  switch (x.kind()) {
    case DigitStream::Kind::FiniteDyadic: return {Membership::Dyadic};
    case DigitStream::Kind::Truncated: return {Membership::Unknown, *x.depth()};
    case DigitStream::Kind::RuleBased: {
      const Membership m = *x.known_membership();
      return {m, m == Membership::Unknown ? *x.depth() : 0};
    }
    case DigitStream::Kind::EventuallyPeriodic: break;
  }
  const auto [mu, lambda] = *x.cycle();
  const std::size_t start = mu + 1;
  bool constant = true, alternating = true;
  for (std::size_t i = 0; i < lambda; ++i) {
    const Bit a = x.digit(start + i);
    const Bit b = x.digit(start + i + 1);
    if (a != b) constant = false;
    if (a + b != 1) alternating = false;
  }
  if (constant) return {Membership::Dyadic};
  if (alternating) return {Membership::MaximaSet};
  return {Membership::Neither};
}

RealBound tent(const RealBound& u) {
  const mpfr_prec_t p = u.precision();
  const RealBound one(1.0, p);
  const RealBound a = min(u, one - u);
  // min() of the two branches is exact at the endpoints; the peak 1/2 is the
  // only interior maximum.
  if (u.contains(0.5)) {
    RealBound r = a;
    mpfr_set_d(r.upper().get(), 0.5, MPFR_RNDU);
    return r;
  }
  return a;
}

namespace {

// |tau^j x - T| where T has binary digits target(1), target(2), ...
// Leading agreement is skipped before the guard window starts, so long runs
// cost digits rather than precision.
template <class Target>
RealBound tail_distance(const DigitStream& x, std::size_t j, Target target, mpfr_prec_t prec) {
  const auto depth = x.depth();
  const std::size_t avail = depth ? *depth - std::min(*depth, j) : std::numeric_limits<std::size_t>::max();
  std::size_t z = 0;
  while (z < avail && x.digit(j + z + 1) == target(z + 1)) ++z;
  if (z == avail) {
    RealBound d = RealBound::between(0.0, 1.0, prec);
    return d.scaled(-static_cast<long>(z + j));
  }
  // Digits after z: the first differs, so the scaled gap is Sum (b_i - t_i) 2^-i.
  const std::size_t g = std::min<std::size_t>(static_cast<std::size_t>(prec), avail - z);
  Integer acc = 0;
  for (std::size_t i = 1; i <= g; ++i) {
    acc <<= 1;
    acc += static_cast<int>(x.digit(j + z + i)) - static_cast<int>(target(z + i));
  }
  if (acc < 0) acc = -acc;
  // Unread digits move the sum by at most 2^-g either way.
  RealBound lo = RealBound::dyadic(acc - 1, -static_cast<long>(g), prec + 2);
  RealBound hi = RealBound::dyadic(acc + 1, -static_cast<long>(g), prec + 2);
  RealBound d = hull(lo, hi);
  d = max(d, RealBound(prec + 2));
  return d.scaled(-static_cast<long>(z + j));
}

}  // namespace

NearestDyadic nearest_dyadic(const DigitStream& x, std::size_t j, mpfr_prec_t prec) {
  if (j == 0) throw OutOfDomain("scale must be positive");
  const Integer idx = x.prefix(j);
  if (auto u = x.exact_tail(j)) {
    const Rational half(1, 2);
    const Integer K = *u <= half ? idx : idx + 1;
    const Rational lam = *u <= half ? *u : 1 - *u;
    return {K, RealBound::from_rational(lam, prec).scaled(-static_cast<long>(j))};
  }
  if (auto d = x.depth(); d && j >= *d) {
    return {idx, RealBound::between(0.0, 0.5, prec).scaled(-static_cast<long>(j))};
  }
  // Nearest of 0 and 1 relative to tau^j x is decided by the next digit.
  const Bit first = x.digit(j + 1);
  const Integer K = first ? idx + 1 : idx;
  return {K, tail_distance(x, j, [first](std::size_t) { return first; }, prec)};
}

NearestMaximum nearest_maxima_point(const DigitStream& x, std::size_t j, mpfr_prec_t prec) {
  if (j == 0) throw OutOfDomain("scale must be positive");
  const Integer idx = x.prefix(j);
  const Rational scale(Integer(1), Integer(1) << j);
  const Rational third(1, 3), two_thirds(2, 3);
  if (auto u = x.exact_tail(j)) {
    const Rational d1 = abs(*u - third), d2 = abs(*u - two_thirds);
    const bool first = d1 <= d2;
    Rational loc = (Rational(idx) + (first ? third : two_thirds)) * scale;
    loc.canonicalize();
    return {loc, RealBound::from_rational(first ? d1 : d2, prec).scaled(-static_cast<long>(j))};
  }
  if (auto d = x.depth(); d && j >= *d) {
    Rational loc = (Rational(idx) + third) * scale;
    loc.canonicalize();
    return {loc, RealBound::between(0.0, 1.0 / 3.0 + 1e-9, prec).scaled(-static_cast<long>(j))};
  }
  // 1/3 = 0.0101..., 2/3 = 0.1010...; the next digit picks the nearer one.
  const Bit first = x.digit(j + 1);
  Rational loc = (Rational(idx) + (first ? two_thirds : third)) * scale;
  loc.canonicalize();
  auto pattern = [first](std::size_t i) { return static_cast<Bit>(i % 2 == 1 ? first : 1 - first); };
  return {loc, tail_distance(x, j, pattern, prec)};
}

ApproxRateTrace rate_trace(const DigitStream& x, RateKind kind, std::size_t j_max, mpfr_prec_t prec) {
  if (j_max == 0) throw OutOfDomain("j_max must be positive");
  ApproxRateTrace trace{kind, {}, {}};
  trace.entries.reserve(j_max);
  for (std::size_t j = 1; j <= j_max; ++j) {
    RealBound d = kind == RateKind::Dyadic ? nearest_dyadic(x, j, prec).distance
                                           : nearest_maxima_point(x, j, prec).distance;
    RealBound ratio = -log2(d);
    ratio /= RealBound(static_cast<double>(j), prec);
    trace.entries.push_back({j, std::move(d), std::move(ratio)});
  }
  RateSummary& s = trace.limsup;
  s.window = (j_max + 2) / 3;
  s.estimate = s.lo = s.hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = j_max - s.window; i < j_max; ++i) {
    const RateEntry& e = trace.entries[i];
    if (e.distance.certainly_zero()) s.infinite = true;
    const double lo = e.ratio.lower_d();
    const double hi = e.ratio.upper_d();
    const double est = std::isinf(hi) ? lo : e.ratio.mid_d();
    s.estimate = std::max(s.estimate, est);
    s.lo = std::max(s.lo, lo);
    s.hi = std::max(s.hi, hi);
  }
  if (s.infinite) s.estimate = std::numeric_limits<double>::infinity();
  return trace;
}

// -- constructions ------------------------------------------------------------

namespace {

Integer floor_of(const Rational& q) {
  Integer z;
  mpz_fdiv_q(z.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return z;
}

std::uint64_t to_u64(const Integer& z) {
  if (z < 0 || z > Integer(std::to_string(std::numeric_limits<std::uint64_t>::max()), 10))
    throw Error("index out of range");
  return std::stoull(z.get_str());
}

// Distinct values [base * u^n], n >= 0, not exceeding `limit`.
std::vector<std::uint64_t> floor_powers(const Rational& u, const Rational& base, std::uint64_t limit) {
  std::vector<std::uint64_t> out;
  Rational p = base;
  const Integer lim(std::to_string(limit));
  for (;;) {
    const Integer f = floor_of(p);
    if (f > lim) break;
    const std::uint64_t v = to_u64(f);
    if (v >= 1 && (out.empty() || out.back() != v)) out.push_back(v);
    p *= u;
    p.canonicalize();
  }
  return out;
}

void push_run(std::vector<DigitRun>& runs, std::uint64_t start, RunPattern pattern) {
  if (!runs.empty() && runs.back().start == start) {
    runs.back().pattern = pattern;
    if (runs.size() >= 2 && runs[runs.size() - 2].pattern == pattern) runs.pop_back();
    return;
  }
  if (!runs.empty() && runs.back().pattern == pattern) return;
  runs.push_back({start, pattern});
}

std::string fmt(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  std::ostringstream os;
  os << q.get_d();
  return os.str();
}

// Ones at positions [u^n].
DigitStream dyadic_rate_point(const Rational& u) {
  const std::uint64_t limit = kRuleDepthLimit;
  const auto P = floor_powers(u, 1, limit);
  std::vector<DigitRun> runs;
  RuleSchedule sched;
  push_run(runs, 1, RunPattern::Zeros);
  for (std::size_t i = 0; i < P.size(); ++i) {
    push_run(runs, P[i], RunPattern::Ones);
    push_run(runs, P[i] + 1, RunPattern::Zeros);
    if (i + 1 < P.size() && P[i + 1] > P[i] + 1) sched.dyadic.push_back({P[i], P[i + 1] - 1});
  }
  return DigitStream::rule_based(std::move(runs), limit, std::move(sched), Membership::Neither,
                                 "r=" + fmt(u));
}

// Ones at even positions 2m except m = [s^n].
DigitStream maxima_rate_point(const Rational& s) {
  const std::uint64_t limit = kRuleDepthLimit;
  const auto Q = floor_powers(s, 1, limit / 2);
  std::vector<DigitRun> runs;
  RuleSchedule sched;
  push_run(runs, 1, RunPattern::OnesAtEven);
  for (std::size_t i = 0; i < Q.size(); ++i) {
    push_run(runs, 2 * Q[i], RunPattern::Zeros);
    push_run(runs, 2 * Q[i] + 1, RunPattern::OnesAtEven);
    if (i + 1 < Q.size() && Q[i + 1] > Q[i] + 1) sched.maxima.push_back({2 * Q[i] + 1, 2 * Q[i + 1] - 1});
  }
  return DigitStream::rule_based(std::move(runs), limit, std::move(sched), Membership::Neither,
                                 "s=" + fmt(s));
}

// A_n = [s^(n-1) u^n], B_n = [s^(n-1) u^(n+1)]: a one at 2A_n, zeros through
// 2B_n+1, then ones at the even places 2k for B_n < k <= A_(n+1).
DigitStream mixed_rate_point(const Rational& u, const Rational& s) {
  const std::uint64_t limit = kRuleDepthLimit;
  std::vector<std::uint64_t> A, B;
  Rational a = u;
  const Integer lim(std::to_string(limit / 2));
  while (floor_of(a) <= lim) {
    A.push_back(to_u64(floor_of(a)));
    Rational b = a * u;
    b.canonicalize();
    B.push_back(floor_of(b) <= lim ? to_u64(floor_of(b)) : limit);
    a = b * s;
    a.canonicalize();
  }
  // Early terms may collide after flooring; start where the chain is strictly increasing.
  std::size_t first = 0;
  for (std::size_t n = 0; n < A.size(); ++n) {
    const bool ok = A[n] < B[n] && (n + 1 >= A.size() || B[n] < A[n + 1]);
    if (!ok) first = n + 1;
  }
  if (first >= A.size()) throw InvalidTarget("targets too close to 1 for the digit table");
  std::vector<DigitRun> runs;
  RuleSchedule sched;
  push_run(runs, 1, RunPattern::Zeros);
  push_run(runs, 2 * A[first], RunPattern::Ones);
  push_run(runs, 2 * A[first] + 1, RunPattern::Zeros);
  for (std::size_t n = first; n < A.size(); ++n) {
    sched.dyadic.push_back({2 * A[n], 2 * B[n] + 1});
    if (n + 1 >= A.size()) break;
    push_run(runs, 2 * B[n] + 2, RunPattern::OnesAtEven);
    push_run(runs, 2 * A[n + 1] + 1, RunPattern::Zeros);
    sched.maxima.push_back({2 * B[n] + 1, 2 * A[n + 1] + 1});
  }
  return DigitStream::rule_based(std::move(runs), limit, std::move(sched), Membership::Neither,
                                 "r=" + fmt(u) + ",s=" + fmt(s));
}

}  // namespace

DigitStream construct_point(const RateTargets& targets) {
  if (!targets.dyadic_rate && !targets.maxima_rate) throw InvalidTarget("no target rate given");
  if (targets.dyadic_rate && *targets.dyadic_rate <= 1) throw InvalidTarget("dyadic rate must exceed 1");
  if (targets.maxima_rate && *targets.maxima_rate <= 1) throw InvalidTarget("maxima rate must exceed 1");
  if (targets.dyadic_rate && targets.maxima_rate) return mixed_rate_point(*targets.dyadic_rate, *targets.maxima_rate);
  if (targets.dyadic_rate) return dyadic_rate_point(*targets.dyadic_rate);
  return maxima_rate_point(*targets.maxima_rate);
}

// -- point-spec parsing ---------------------------------------------------------

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }

  void expect(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) throw ParseError(pos_, "expected '" + std::string(lit) + "'");
    pos_ += lit.size();
  }
  bool accept(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) return false;
    pos_ += lit.size();
    return true;
  }
  Integer integer() {
    const std::size_t b = pos_;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (b == pos_) throw ParseError(pos_, "expected digits");
    return Integer(std::string(s_.substr(b, pos_ - b)), 10);
  }
  std::string_view decimal_token() {
    const std::size_t b = pos_;
    while (!done() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) ++pos_;
    if (b == pos_) throw ParseError(pos_, "expected a decimal literal");
    return s_.substr(b, pos_ - b);
  }
  void finish() {
    if (!done()) throw ParseError(pos_, "unexpected trailing input");
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

unsigned small_exponent(const Integer& z, std::size_t at) {
  if (z > 1 << 20) throw ParseError(at, "exponent too large");
  return static_cast<unsigned>(z.get_ui());
}

}  // namespace

Rational parse_decimal(std::string_view text, std::size_t offset) {
  if (text.empty()) throw ParseError(offset, "empty decimal literal");
  const auto dot = text.find('.');
  std::string_view ip = text.substr(0, dot);
  std::string_view fp = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (ip.empty()) throw ParseError(offset, "missing integer part");
  if (dot != std::string_view::npos && fp.empty()) throw ParseError(offset + dot + 1, "missing fraction digits");
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!std::isdigit(static_cast<unsigned char>(c)) && !(c == '.' && i == dot))
      throw ParseError(offset + i, "invalid character in decimal literal");
  }
  Integer num(std::string(ip) + std::string(fp), 10);
  Integer den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, fp.size());
  Rational q(num, den);
  q.canonicalize();
  return q;
}

DigitStream parse_point(std::string_view spec) {
  Cursor c(spec);
  if (c.accept("dyadic:")) {
    const Integer K = c.integer();
    c.expect("/2^");
    const std::size_t at = c.pos();
    const unsigned N = small_exponent(c.integer(), at);
    c.finish();
    if (K > (Integer(1) << N)) throw ParseError(0, "dyadic point exceeds 1");
    return DigitStream::finite_dyadic(K, N);
  }
  if (c.accept("rational:")) {
    const Integer P = c.integer();
    c.expect("/");
    const std::size_t at = c.pos();
    const Integer Q = c.integer();
    c.finish();
    if (Q == 0) throw ParseError(at, "zero denominator");
    if (P > Q) throw ParseError(0, "rational point exceeds 1");
    return DigitStream::from_rational(Rational(P, Q));
  }
  if (c.accept("smax:")) {
    const std::size_t at_n = c.pos();
    const unsigned N = small_exponent(c.integer(), at_n);
    c.expect(":");
    const std::size_t at_k = c.pos();
    const Integer K = c.integer();
    c.expect(":");
    const std::size_t at_v = c.pos();
    const Integer v = c.integer();
    c.finish();
    if (K >= (Integer(1) << N)) throw ParseError(at_k, "K must be below 2^N");
    if (v != 1 && v != 2) throw ParseError(at_v, "v must be 1 or 2");
    return DigitStream::from_rational(Rational(3 * K + v, 3 * (Integer(1) << N)));
  }
  if (c.accept("rule:")) {
    RateTargets t;
    if (c.accept("r=")) {
      const std::size_t at = c.pos();
      t.dyadic_rate = parse_decimal(c.decimal_token(), at);
      if (c.accept(",")) {
        c.expect("s=");
        const std::size_t at_s = c.pos();
        t.maxima_rate = parse_decimal(c.decimal_token(), at_s);
      }
    } else if (c.accept("s=")) {
      const std::size_t at = c.pos();
      t.maxima_rate = parse_decimal(c.decimal_token(), at);
    } else {
      throw ParseError(c.pos(), "expected 'r=' or 's='");
    }
    c.finish();
    return construct_point(t);
  }
  if (c.accept("bits:")) {
    c.expect("0.");
    std::vector<Bit> bits;
    while (!c.done()) {
      const char ch = c.peek();
      if (ch != '0' && ch != '1') throw ParseError(c.pos(), "expected a binary digit");
      bits.push_back(static_cast<Bit>(ch - '0'));
      c.accept(std::string_view(&ch, 1));
    }
    if (bits.empty()) throw ParseError(c.pos(), "expected at least one binary digit");
    return DigitStream::truncated(std::move(bits));
  }
  throw ParseError(0, "unknown point kind (expected dyadic:, rational:, smax:, rule: or bits:)");
}

}  // namespace knopp
