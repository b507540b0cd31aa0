#include "doctest.h"

#include <cmath>
#include <random>

#include "knopp/error.hpp"
#include "knopp/real_bound.hpp"

using namespace knopp;

TEST_CASE("rationals are enclosed") {
  RealBound third = RealBound::from_rational(Rational(1, 3));
  CHECK(third.contains(Rational(1, 3)));
  CHECK_FALSE(third.is_point());
  CHECK(third.width_d() < 1e-35);
  CHECK(RealBound::from_rational(Rational(3, 8)).is_point());
  CHECK(RealBound::dyadic(Integer(5), -4).contains(Rational(5, 16)));
}

TEST_CASE("arithmetic contains exact results") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> num(-1000, 1000), den(1, 999);
  for (int i = 0; i < 500; ++i) {
    Rational a(num(rng), den(rng)), b(num(rng), den(rng));
    a.canonicalize();
    b.canonicalize();
    RealBound A = RealBound::from_rational(a, 64), B = RealBound::from_rational(b, 64);
    CHECK((A + B).contains(Rational(a + b)));
    CHECK((A - B).contains(Rational(a - b)));
    CHECK((A * B).contains(Rational(a * b)));
    if (b != 0) CHECK((A / B).contains(Rational(a / b)));
    CHECK(sqr(A).contains(Rational(a * a)));
    CHECK(abs(A).contains(Rational(abs(a))));
  }
}

TEST_CASE("interval operations") {
  RealBound x = RealBound::between(-1, 2);
  CHECK(sqr(x).lower_d() == 0);
  CHECK(sqr(x).upper_d() == 4);
  CHECK(abs(x).lower_d() == 0);
  CHECK(hull(RealBound(1.0), RealBound(3.0)).contains(2.0));
  CHECK(intersect(x, RealBound::between(1, 5)).lower_d() == 1);
  CHECK_THROWS_AS(intersect(RealBound(0.0), RealBound(1.0)), Error);
  CHECK_THROWS_AS(RealBound(1.0) / x, Error);
  CHECK(x.scaled(3).upper_d() == 16);
  CHECK(clamp(x, RealBound(0.0), RealBound(1.0)).upper_d() == 1);
  CHECK(RealBound(1.0).certainly_less(RealBound(2.0)));
  CHECK_FALSE(x.certainly_less(RealBound(1.5)));
}

TEST_CASE("transcendental functions") {
  RealBound half = exp2(RealBound(-0.5));
  CHECK(sqr(half).contains(0.5));
  CHECK(half.width_d() > 0);
  CHECK(std::fabs(half.mid_d() - std::sqrt(0.5)) < 1e-16);
  CHECK(log2(RealBound(8.0)).contains(3.0));
  CHECK(log(RealBound(0.0)).lower_d() == -INFINITY);
  CHECK_THROWS_AS(log(RealBound(-1.0)), OutOfDomain);
  CHECK_THROWS_AS(pow(RealBound(0.0), RealBound(2.0)), OutOfDomain);
  CHECK(pow(RealBound(2.0), RealBound(10.0)).contains(1024.0));
}

TEST_CASE("precision changes round outward") {
  RealBound third = RealBound::from_rational(Rational(1, 3), 256);
  RealBound low = third.with_precision(24);
  CHECK(low.contains(third));
  CHECK(low.precision() == 24);
}
