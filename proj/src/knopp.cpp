#include "knopp/knopp.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <random>

#include "knopp/error.hpp"

namespace knopp {

// -- Alpha --------------------------------------------------------------------

Alpha::Alpha(const Rational& alpha) : alpha_(alpha) {
  alpha_.canonicalize();
  if (alpha_ <= 0 || alpha_ >= 1) throw OutOfDomain("alpha must lie in (0, 1)");
  value_ = alpha_.get_d();
  t_scale_d_ = std::exp2(-value_);
}

namespace {

Rational shortest_decimal(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  if (ec != std::errc{}) throw OutOfDomain("alpha not representable");
  return parse_decimal(std::string_view(buf.data(), static_cast<std::size_t>(end - buf.data())));
}

}  // namespace

Alpha::Alpha(double alpha) : Alpha(alpha > 0 && alpha < 1 ? shortest_decimal(alpha) : Rational(alpha)) {}

RealBound Alpha::t_scale(mpfr_prec_t prec) const {
  return exp2(-RealBound::from_rational(alpha_, prec + 16)).with_precision(prec);
}

RealBound Alpha::t_slope(mpfr_prec_t prec) const { return t_scale(prec).scaled(1); }

int Alpha::sign_at_t(const TPoly& p) const {
  if (p.is_zero()) return 0;
  const Integer& a = alpha_.get_num();
  const Integer& b_z = alpha_.get_den();
  TPoly reduced = p;
  constexpr unsigned long kMaxReduce = 4096;
  if (b_z <= kMaxReduce) {
    // t^(b q + r) = 2^(-a q) t^r since t^b = 2^-a.
    const std::size_t b = b_z.get_ui();
    const unsigned long a_ui = a.get_ui();
    std::vector<Rational> c(b);
    for (std::size_t j = 0; j < p.coefficients().size(); ++j) {
      const std::size_t q = j / b;
      Rational term = p.coefficients()[j];
      mpq_div_2exp(term.get_mpq_t(), term.get_mpq_t(), a_ui * q);
      c[j % b] += term;
    }
    reduced = TPoly(std::move(c));
    if (reduced.is_zero()) return 0;
  }
  for (mpfr_prec_t prec = kDefaultPrecision; prec <= 16 * kMaxPrecision; prec *= 2) {
    const RealBound v = reduced.evaluate(t_scale(prec + 32));
    if (v.certainly_positive()) return 1;
    if (v.certainly_negative()) return -1;
  }
  throw ThresholdAmbiguity("sign of a t-polynomial could not be certified");
}

// -- exact pieces ---------------------------------------------------------------

Rational lambda(const Rational& x) {
  if (x < 0 || x > 1) throw OutOfDomain("Lambda is defined on [0, 1]");
  Rational r = x <= Rational(1, 2) ? x : Rational(1 - x);
  r.canonicalize();
  return r;
}

namespace {

// Lambda(tau^j x) from digits j+1 .. j+guard, or exactly.
Rational lambda_of_tail(const DigitStream& x, std::size_t j, std::size_t guard) {
  if (auto u = x.exact_tail(j)) return lambda(*u);
  std::size_t n = guard;
  if (auto d = x.depth()) {
    if (j >= *d) throw DepthExceeded(j + 1, *d);
    n = std::min(n, *d - j);
  }
  Integer z = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    z <<= 1;
    if (x.digit(j + i)) z += 1;
  }
  return lambda(Rational(z, Integer(1) << n));
}

}  // namespace

TPoly partial_sum_value(const DigitStream& x, std::size_t n, std::size_t guard) {
  std::vector<Rational> c;
  c.reserve(n + 1);
  for (std::size_t j = 0; j <= n; ++j) c.push_back(lambda_of_tail(x, j, guard));
  return TPoly(std::move(c));
}

TPoly slope(const DigitStream& x, std::size_t n) {
  std::vector<Rational> c;
  c.reserve(n + 1);
  Integer pow2 = 1;
  for (std::size_t j = 0; j <= n; ++j) {
    c.emplace_back(x.digit(j + 1) ? Integer(-pow2) : pow2);
    pow2 <<= 1;
  }
  return TPoly(std::move(c));
}

RealBound slope_value(const DigitStream& x, std::size_t n, const Alpha& alpha, mpfr_prec_t prec) {
  return slope(x, n).evaluate(alpha.t_scale(prec));
}

RealBound tail_bound(std::size_t n, const Alpha& alpha, mpfr_prec_t prec) {
  const RealBound t = alpha.t_scale(prec);
  RealBound p(1.0, prec);
  for (std::size_t i = 0; i <= n; ++i) p *= t;
  return p / (RealBound(1.0, prec) - t).scaled(1);
}

// -- tables -------------------------------------------------------------------

namespace {

RealBound power(const RealBound& base, std::size_t n) {
  RealBound result(1.0, base.precision());
  RealBound b = base;
  while (n > 0) {
    if (n & 1U) result *= b;
    n >>= 1;
    if (n > 0) b *= b;
  }
  return result;
}

}  // namespace

KnoppTables::KnoppTables(const Alpha& alpha, mpfr_prec_t prec, std::size_t n_max)
    : alpha_(alpha), prec_(prec), fmax_(prec), mean_(prec), third_(RealBound(1.0, prec) / RealBound(3.0, prec)) {
  n_max = std::max<std::size_t>(n_max, 2);
  const RealBound ts = alpha.t_scale(prec);
  const RealBound tl = ts.scaled(1);
  ts_.reserve(n_max + 1);
  tl_.reserve(n_max + 1);
  ts_.emplace_back(1.0, prec);
  tl_.emplace_back(1.0, prec);
  for (std::size_t n = 1; n <= n_max; ++n) {
    ts_.push_back(ts_.back() * ts);
    tl_.push_back(tl_.back() * tl);
  }
  const RealBound one_minus_t = RealBound(1.0, prec) - ts;
  fmax_ = RealBound(1.0, prec) / (RealBound(3.0, prec) * one_minus_t);
  mean_ = RealBound(1.0, prec) / one_minus_t.scaled(2);
  // V_{N+1} = 1/(3 2^(N+1)) + t V_N.
  const double tl_d = alpha.t_slope_d();
  const std::size_t n_cand = static_cast<std::size_t>(std::ceil(std::log(4.0) / std::log(tl_d))) + 6;
  cand_.reserve(n_cand + 1);
  cand_.push_back(fmax_);
  for (std::size_t N = 1; N <= n_cand; ++N) cand_.push_back(third_.scaled(-static_cast<long>(N)) + ts * cand_.back());
}

const RealBound& KnoppTables::scale_pow(std::size_t n) const {
  if (n >= ts_.size()) throw DepthExceeded(n, ts_.size() - 1);
  return ts_[n];
}

const RealBound& KnoppTables::slope_pow(std::size_t n) const {
  if (n >= tl_.size()) throw DepthExceeded(n, tl_.size() - 1);
  return tl_[n];
}

RealBound KnoppTables::threshold(std::size_t N) const {
  const RealBound tl = alpha_.t_slope(prec_);
  const RealBound one(1.0, prec_);
  return -((N < tl_.size() ? tl_[N] : power(tl, N)) - one) / (tl - one);
}

RealBound KnoppTables::candidate(std::size_t N) const {
  if (N < cand_.size()) return cand_[N];
  const RealBound& ts = ts_[1];
  RealBound v = cand_.back();
  for (std::size_t n = cand_.size(); n <= N; ++n) v = third_.scaled(-static_cast<long>(n)) + ts * v;
  return v;
}

std::size_t KnoppTables::optimal_index(double q) const {
  // p = -q lies between thresholds N+1 and N where t^N - 1 <= q (t - 1) <= t^(N+1) - 1.
  const double t = alpha_.t_slope_d();
  const double v = std::log1p(q * (t - 1)) / std::log(t);
  if (!std::isfinite(v) || v < 0) return 0;
  return static_cast<std::size_t>(v);
}

RealBound KnoppTables::max_value_point(const Real& p_real) const {
  RealBound p(p_real, p_real);
  if (p.certainly_positive()) {
    // M(p) = p + M(-p) by the symmetry F(x) = F(1 - x).
    const Real neg = (-p).lower();
    return p + max_value_point(neg);
  }
  const double q = -mpfr_get_d(p_real.get(), MPFR_RNDN);
  const std::size_t n_star = optimal_index(q);
  const std::size_t first = n_star >= 2 ? n_star - 2 : 0;
  RealBound best(prec_);
  bool have = false;
  for (std::size_t N = first; N <= n_star + 2; ++N) {
    RealBound v = candidate(N) + p * third_.scaled(-static_cast<long>(N));
    best = have ? max(best, v) : v;
    have = true;
  }
  return best;
}

RealBound KnoppTables::max_value(const RealBound& p) const {
  // M is non-decreasing, so the bound is spanned by its values at the ends.
  if (p.is_point()) return max_value_point(p.lower());
  const RealBound lo = max_value_point(p.lower());
  const RealBound hi = max_value_point(p.upper());
  return RealBound(lo.lower(), hi.upper());
}

RealBound KnoppTables::dyadic_value(const Integer& K, std::size_t N) const {
  RealBound acc(prec_);
  Integer f, g;
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t m = N - j;
    mpz_fdiv_r_2exp(f.get_mpz_t(), K.get_mpz_t(), m);
    if (f == 0) continue;
    g = (Integer(1) << m) - f;
    const Integer& lam = f <= g ? f : g;
    acc += scale_pow(j) * RealBound::dyadic(lam, -static_cast<long>(m), prec_);
  }
  return acc;
}

RealBound KnoppTables::dyadic_slope(const Integer& K, std::size_t N) const {
  RealBound acc(prec_);
  for (std::size_t j = 0; j < N; ++j) {
    const bool one = mpz_tstbit(K.get_mpz_t(), N - 1 - j) != 0;
    if (one) acc -= slope_pow(j);
    else acc += slope_pow(j);
  }
  return acc;
}

// -- evaluation ---------------------------------------------------------------

RealBound enclosure_at_depth(const DigitStream& x, std::size_t D, const KnoppTables& tables) {
  const mpfr_prec_t prec = tables.precision();
  const Integer K = x.prefix(D);
  const RealBound Fa = tables.dyadic_value(K, D);
  const RealBound Cw = tables.dyadic_slope(K, D).scaled(-static_cast<long>(D));
  const RealBound zero(prec);
  RealBound spread = hull(zero, Cw);
  RealBound bump = hull(zero, tables.scale_pow(D) * tables.global_max());
  return Fa + spread + bump;
}

RealBound eval_F_exact(const DigitStream& x, const KnoppTables& tables) {
  const mpfr_prec_t prec = tables.precision();
  const auto q = x.exact_value();
  if (!q) throw Error("eval_F_exact needs a finite-dyadic or periodic stream");
  const Integer& den = q->get_den();
  if (mpz_popcount(den.get_mpz_t()) == 1) {
    const std::size_t N = mpz_scan1(den.get_mpz_t(), 0);
    if (*q == 1) return RealBound(prec);
    return tables.dyadic_value(q->get_num(), N);
  }
  const auto [m, L] = *x.cycle();
  const RealBound ts = tables.alpha().t_scale(prec);
  RealBound head(prec);
  RealBound tp(1.0, prec);
  for (std::size_t j = 0; j < m; ++j) {
    head += tp * RealBound::from_rational(lambda(*x.exact_tail(j)), prec);
    tp *= ts;
  }
  RealBound cyc(prec);
  RealBound cp(1.0, prec);
  for (std::size_t j = 0; j < L; ++j) {
    cyc += cp * RealBound::from_rational(lambda(*x.exact_tail(m + j)), prec);
    cp *= ts;
  }
  // The tail repeats with period L: F(y) = sum_{j<L} t^j Lambda(tau^j y) / (1 - t^L).
  return head + tp * cyc / (RealBound(1.0, prec) - cp);
}

RealBound eval_F(const DigitStream& x, const Alpha& alpha, double eps) {
  if (!(eps > 0)) throw OutOfDomain("eps must be positive");
  if (x.is_exact()) {
    for (mpfr_prec_t prec = kDefaultPrecision; prec <= kMaxPrecision; prec *= 2) {
      const auto q = x.exact_value();
      const std::size_t need = mpz_sizeinbase(q->get_den().get_mpz_t(), 2) + 2;
      const KnoppTables sized(alpha, prec, need);
      RealBound v = eval_F_exact(x, sized);
      if (v.width_d() <= eps) return v;
    }
    throw PrecisionUnreachable("F(x) bracket wider than requested at maximum precision");
  }
  const double t = alpha.t_scale_d();
  const double slope_const = 1.0 / (alpha.t_slope_d() - 1.0);
  const double fmax = 1.0 / (3.0 * (1.0 - t));
  std::size_t D = static_cast<std::size_t>(std::ceil(std::log(eps / (slope_const + fmax)) / std::log(t))) + 2;
  D = std::max<std::size_t>(D, 1);
  if (auto depth = x.depth(); depth && D > *depth) {
    if (x.kind() == DigitStream::Kind::Truncated) D = *depth;
    else throw DepthExceeded(D, *depth);
  }
  const mpfr_prec_t prec = std::max<mpfr_prec_t>(kDefaultPrecision, static_cast<mpfr_prec_t>(D) + 64);
  if (prec > 16 * kMaxPrecision) throw PrecisionUnreachable("requested width needs too many digits");
  const KnoppTables tables(alpha, prec, D + 1);
  RealBound v = enclosure_at_depth(x, D, tables);
  if (v.width_d() > eps) throw DepthExceeded(D + 1, D);
  return v;
}

// -- probes ---------------------------------------------------------------------

namespace {

constexpr int kProbeBits = 48;

double dyadic_value_d(std::uint64_t K, double t) {
  constexpr std::uint64_t mask = (std::uint64_t{1} << kProbeBits) - 1;
  constexpr double scale = 1.0 / static_cast<double>(std::uint64_t{1} << kProbeBits);
  double acc = 0, tp = 1;
  for (int j = 0; j < kProbeBits; ++j) {
    const double u = static_cast<double>((K << j) & mask) * scale;
    acc += tp * std::min(u, 1 - u);
    tp *= t;
  }
  return acc;
}

}  // namespace

HolderProbe holder_probe(const Alpha& alpha, std::size_t pair_count, std::uint64_t seed) {
  if (pair_count == 0) throw OutOfDomain("pair_count must be positive");
  std::mt19937_64 rng(seed);
  const std::uint64_t top = std::uint64_t{1} << kProbeBits;
  std::uniform_int_distribution<std::uint64_t> pick_x(0, top);
  std::uniform_int_distribution<int> pick_scale(1, kProbeBits - 2);
  const double t = alpha.t_scale_d();
  const double a = alpha.value();
  HolderProbe best{0, 0, 0, pair_count};
  for (std::size_t i = 0; i < pair_count; ++i) {
    const int m = pick_scale(rng);
    std::uniform_int_distribution<std::uint64_t> pick_d(1, std::uint64_t{1} << (kProbeBits - m));
    const std::uint64_t x = pick_x(rng);
    const std::uint64_t d = pick_d(rng);
    const std::uint64_t y = x + d <= top ? x + d : x - d;
    const double fx = x == top ? 0.0 : dyadic_value_d(x, t);
    const double fy = y == top ? 0.0 : dyadic_value_d(y, t);
    const double dist = static_cast<double>(d) / static_cast<double>(top);
    const double ratio = std::fabs(fx - fy) / std::pow(dist, a);
    if (ratio > best.constant) best = {ratio, static_cast<double>(x) / top, static_cast<double>(y) / top, pair_count};
  }
  return best;
}

TPoly d_sequence(std::size_t n) {
  std::vector<Rational> c(n + 2);
  for (std::size_t j = 0; j <= n; ++j) c[j + 1] = (j % 2 == 0) ? 1 : -1;
  return TPoly(std::move(c));
}

}  // namespace knopp
