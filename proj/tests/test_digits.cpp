#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "knopp/digits.hpp"
#include "knopp/error.hpp"

using namespace knopp;

namespace {

Rational rat(unsigned long p, unsigned long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

// Independent oracle: i_l(x) = floor(2^l x) mod 2 for x in [0, 1).
int oracle_digit(const Rational& x, std::size_t l) {
  Rational y = x * Rational(Integer(1) << l);
  Integer f;
  mpz_fdiv_q(f.get_mpz_t(), y.get_num_mpz_t(), y.get_den_mpz_t());
  return mpz_odd_p(f.get_mpz_t()) ? 1 : 0;
}

Rational frac(const Rational& y) {
  Integer f;
  mpz_fdiv_q(f.get_mpz_t(), y.get_num_mpz_t(), y.get_den_mpz_t());
  Rational r = y - Rational(f);
  r.canonicalize();
  return r;
}

Rational value_of(const std::vector<Bit>& pre, const std::vector<Bit>& per) {
  // x = (P + C / (2^L - 1)) / 2^m
  Integer P = 0, C = 0;
  for (Bit b : pre) P = 2 * P + b;
  for (Bit b : per) C = 2 * C + b;
  Rational x = (Rational(P) + Rational(C, (Integer(1) << per.size()) - 1)) / Rational(Integer(1) << pre.size());
  x.canonicalize();
  return x;
}

std::vector<Bit> bits_of(unsigned v, std::size_t n) {
  std::vector<Bit> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Bit>((v >> (n - 1 - i)) & 1U);
  return out;
}

}  // namespace

TEST_CASE("digit queries follow the stated convention") {
  const auto quarter = DigitStream::finite_dyadic(1, 2);
  CHECK(digit(quarter, 1) == 0);
  CHECK(digit(quarter, 2) == 1);
  CHECK(digit(quarter, 3) == 0);
  const auto quarter_ones = DigitStream::finite_dyadic(1, 2, DyadicConvention::TerminatingOnes);
  CHECK(digit(quarter_ones, 2) == 0);
  CHECK(digit(quarter_ones, 3) == 1);
  CHECK(digit(quarter_ones, 40) == 1);
  CHECK(*quarter_ones.exact_value() == Rational(1, 4));

  const auto third = DigitStream::periodic({}, {0, 1});
  CHECK(digit(third, 4) == 1);
  CHECK(*third.exact_value() == Rational(1, 3));
  CHECK(classify_membership(third).kind == Membership::MaximaSet);

  const auto trunc = DigitStream::truncated({1, 0, 1});
  CHECK(digit(trunc, 3) == 1);
  CHECK_THROWS_AS(digit(trunc, 5), DepthExceeded);
}

TEST_CASE("digits of rationals agree with floor(2^l x) mod 2") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const unsigned long Q = 1 + rng() % 500;
    const unsigned long P = rng() % Q;
    const Rational x = rat(P, Q);
    const auto s = DigitStream::from_rational(x);
    CHECK(*s.exact_value() == rat(P, Q));
    for (std::size_t l = 1; l <= 64; ++l) REQUIRE(digit(s, l) == oracle_digit(rat(P, Q), l));
  }
}

TEST_CASE("shift agrees with 2x mod 1 and is a semigroup action") {
  const auto third = DigitStream::from_rational(Rational(1, 3));
  CHECK(*shift(third, 1).exact_value() == Rational(2, 3));
  CHECK(*shift(DigitStream::finite_dyadic(1, 2), 2).exact_value() == 0);
  CHECK(*shift(third, 0).exact_value() == Rational(1, 3));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const unsigned long Q = 3 + rng() % 200;
    const Rational x = rat(rng() % Q, Q);
    const auto s = DigitStream::from_rational(x);
    const std::size_t a = rng() % 20, b = rng() % 20;
    Rational y = x;
    for (std::size_t i = 0; i < a + b; ++i) y = frac(2 * y);
    CHECK(*shift(shift(s, a), b).exact_value() == y);
    for (std::size_t l = 1; l <= 30; ++l) REQUIRE(digit(shift(shift(s, a), b), l) == digit(s, l + a + b));
  }

  const auto trunc = DigitStream::truncated({1, 0, 1, 1});
  CHECK(*shift(trunc, 1).depth() == 3);
  CHECK_THROWS_AS(shift(trunc, 4), DepthExceeded);
}

TEST_CASE("membership of every short eventually periodic stream matches its reduced denominator") {
  // Oracle: dyadic iff the denominator is a power of two; in the maxima set
  // iff it is 3 times a power of two.
  std::size_t checked = 0;
  for (std::size_t m = 0; m <= 6; ++m) {
    for (unsigned pv = 0; pv < (1U << m); ++pv) {
      for (std::size_t L = 1; L <= 4; ++L) {
        for (unsigned cv = 0; cv < (1U << L); ++cv) {
          const auto pre = bits_of(pv, m), per = bits_of(cv, L);
          const Rational x = value_of(pre, per);
          Integer den = x.get_den();
          const std::size_t twos = mpz_scan1(den.get_mpz_t(), 0);
          den >>= twos;
          Membership expect = den == 1 ? Membership::Dyadic : den == 3 ? Membership::MaximaSet : Membership::Neither;
          const auto got = classify_membership(DigitStream::periodic(pre, per)).kind;
          REQUIRE(got == expect);
          ++checked;
        }
      }
    }
  }
  CHECK(checked == 127 * 30);
  CHECK(classify_membership(DigitStream::periodic({}, {0, 0, 1})).kind == Membership::Neither);
  CHECK(classify_membership(DigitStream::finite_dyadic(1, 2)).kind == Membership::Dyadic);
  const auto unknown = classify_membership(DigitStream::truncated({0, 1, 1}));
  CHECK(unknown.kind == Membership::Unknown);
  CHECK(unknown.depth == 3);
}

TEST_CASE("nearest dyadic and nearest maximum match brute force") {
  auto d = nearest_dyadic(DigitStream::from_rational(Rational(1, 3)), 2);
  CHECK(d.K == 1);
  CHECK(d.distance.contains(Rational(1, 12)));
  CHECK(d.distance.width_d() < 1e-30);
  d = nearest_dyadic(DigitStream::finite_dyadic(1, 2), 2);
  CHECK(d.K == 1);
  CHECK(d.distance.certainly_zero());

  // Truncated 0.011: x lies in [3/8, 1/2], so the distance to 1/2 is at most 1/8.
  d = nearest_dyadic(parse_point("bits:0.011"), 1);
  CHECK(d.K == 1);
  CHECK(d.distance.contains(0.0));
  CHECK(d.distance.contains(0.125));
  CHECK(d.distance.upper_d() <= 0.125 + 1e-30);

  auto m = nearest_maxima_point(DigitStream::from_rational(Rational(1, 3)), 1);
  CHECK(m.location == Rational(1, 3));
  CHECK(m.distance.certainly_zero());
  m = nearest_maxima_point(DigitStream::finite_dyadic(1, 1), 1);
  CHECK(m.distance.contains(Rational(1, 6)));
  m = nearest_maxima_point(DigitStream::from_rational(Rational(2, 3)), 3);
  CHECK(m.distance.certainly_zero());

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const unsigned long Q = 2 + rng() % 300;
    const Rational x = rat(rng() % (Q + 1), Q);
    const std::size_t j = 1 + rng() % 12;
    const auto s = DigitStream::from_rational(x);
    const Rational scale(1, Integer(1) << j);
    Rational best_d = 10, best_m = 10;
    for (long k = -1; k <= (1L << j) + 1; ++k) {
      best_d = std::min<Rational>(best_d, abs(Rational(k) * scale - x));
      for (int v = 1; v <= 2; ++v) best_m = std::min<Rational>(best_m, abs((Rational(k) + Rational(v, 3)) * scale - x));
    }
    REQUIRE(nearest_dyadic(s, j).distance.contains(best_d));
    REQUIRE(nearest_maxima_point(s, j).distance.contains(best_m));
    const auto nm = nearest_maxima_point(s, j);
    REQUIRE(abs(nm.location - x) == best_m);
  }
}

TEST_CASE("constructed points realise their target rates") {
  const auto r2 = construct_point({Rational(2), std::nullopt});
  for (std::size_t l = 1; l <= 70; ++l) {
    const bool power = (l & (l - 1)) == 0;
    REQUIRE(digit(r2, l) == (power ? 1 : 0));
  }
  CHECK(classify_membership(r2).kind == Membership::Neither);

  const auto tr = rate_trace(r2, RateKind::Dyadic, 300);
  CHECK(tr.entries.size() == 300);
  CHECK(tr.limsup.window == 100);
  CHECK(tr.limsup.estimate == doctest::Approx(2.0).epsilon(0.02));
  for (const auto& e : tr.entries) REQUIRE(e.ratio.upper_d() >= 1.0 - 1e-9);
  const auto tr_s = rate_trace(r2, RateKind::Maxima, 300);
  CHECK(tr_s.limsup.estimate < 1.1);

  const auto s2 = construct_point({std::nullopt, Rational(2)});
  CHECK(rate_trace(s2, RateKind::Maxima, 300).limsup.estimate == doctest::Approx(2.0).epsilon(0.03));
  CHECK(rate_trace(s2, RateKind::Dyadic, 300).limsup.estimate < 1.1);

  const auto mixed = construct_point({Rational(3), Rational(3)});
  CHECK(classify_membership(mixed).kind == Membership::Neither);
  CHECK(rate_trace(mixed, RateKind::Dyadic, 600).limsup.estimate == doctest::Approx(3.0).epsilon(0.03));
  CHECK(rate_trace(mixed, RateKind::Maxima, 200).limsup.estimate == doctest::Approx(3.0).epsilon(0.03));
  const auto sched = *mixed.schedule();
  REQUIRE(sched.dyadic.size() >= 3);
  CHECK(sched.dyadic[0].start == 6);
  CHECK(sched.dyadic[1].start == 54);
  CHECK(sched.maxima[0].start == 19);

  const auto seventh = DigitStream::periodic({}, {0, 0, 1});
  CHECK(rate_trace(seventh, RateKind::Dyadic, 300).limsup.estimate < 1.05);
  CHECK(rate_trace(seventh, RateKind::Maxima, 300).limsup.estimate < 1.05);
  CHECK(rate_trace(DigitStream::periodic({}, {0, 1}), RateKind::Maxima, 30).limsup.infinite);

  for (const char* u : {"1.1", "1.5", "2", "2.5", "3", "4"}) {
    CHECK(classify_membership(construct_point({parse_decimal(u), std::nullopt})).kind == Membership::Neither);
  }
  CHECK_THROWS_AS(construct_point({Rational(1), std::nullopt}), InvalidTarget);
  CHECK_THROWS_AS(construct_point({Rational(2), Rational(1, 2)}), InvalidTarget);
}

TEST_CASE("point specs parse exactly and report error positions") {
  CHECK(*parse_point("dyadic:5/2^4").exact_value() == Rational(5, 16));
  CHECK(*parse_point("rational:1/7").exact_value() == Rational(1, 7));
  CHECK(*parse_point("smax:3:2:1").exact_value() == Rational(7, 24));
  CHECK(parse_point("rule:r=2").kind() == DigitStream::Kind::RuleBased);
  CHECK(parse_point("rule:r=3,s=3").kind() == DigitStream::Kind::RuleBased);
  CHECK(parse_point("rule:s=2.5").kind() == DigitStream::Kind::RuleBased);
  CHECK(*parse_point("bits:0.011").depth() == 3);
  CHECK(parse_decimal("1.25") == Rational(5, 4));
  CHECK(parse_decimal("0.25") == Rational(1, 4));
  CHECK(parse_decimal("0.8") == Rational(4, 5));
  CHECK(*parse_point("dyadic:09/2^4").exact_value() == Rational(9, 16));

  auto position_of = [](const char* spec) -> std::size_t {
    try {
      parse_point(spec);
    } catch (const ParseError& e) {
      return e.position();
    }
    return 999;
  };
  CHECK(position_of("dyadic:3/2^1") == 0);
  CHECK(position_of("dyadic:3/3^1") == 8);
  CHECK(position_of("bits:0.01x1") == 9);
  CHECK(position_of("smax:3:2:5") == 9);
  CHECK(position_of("rule:q=2") == 5);
  CHECK(position_of("rational:1/0") == 11);
  CHECK(position_of("circle:1") == 0);
  CHECK_THROWS_AS(parse_point("rule:r=0.5"), InvalidTarget);
}
