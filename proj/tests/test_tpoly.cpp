#include "doctest.h"

#include "knopp/tpoly.hpp"

using namespace knopp;

TEST_CASE("construction trims zeros") {
  TPoly p({Rational(1), Rational(0), Rational(0)});
  CHECK(p.degree() == 0);
  CHECK(TPoly({Rational(0)}).is_zero());
  TPoly m = TPoly::monomial(3, Rational(2, 5));
  CHECK(m.degree() == 3);
  CHECK(m.coefficient(3) == Rational(2, 5));
  CHECK(m.coefficient(7) == 0);
}

TEST_CASE("ring operations") {
  TPoly a({Rational(1), Rational(1)});   // 1 + t
  TPoly b({Rational(1), Rational(-1)});  // 1 - t
  CHECK(a * b == TPoly({Rational(1), Rational(0), Rational(-1)}));
  CHECK((a + b) == TPoly::constant(Rational(2)));
  CHECK((a - a).is_zero());
  CHECK(-a == TPoly({Rational(-1), Rational(-1)}));
  CHECK(a.shifted(2) == TPoly({Rational(0), Rational(0), Rational(1), Rational(1)}));
  CHECK(a * Rational(1, 2) == TPoly({Rational(1, 2), Rational(1, 2)}));
  TPoly c = a;
  c.add_term(1, Rational(-1));
  CHECK(c == TPoly::constant(Rational(1)));
}

TEST_CASE("evaluation") {
  TPoly p({Rational(1, 3), Rational(-2), Rational(0), Rational(5, 7)});
  const Rational t(3, 4);
  const Rational exact = p.evaluate(t);
  CHECK(exact == Rational(1, 3) - 2 * t + Rational(5, 7) * t * t * t);
  CHECK(p.evaluate(RealBound::from_rational(t)).contains(exact));
  RealBound wide = RealBound::between(0.5, 1.0);
  RealBound v = p.evaluate(wide);
  for (double s : {0.5, 0.6, 0.75, 0.9, 1.0}) {
    Rational q(s);
    CHECK(v.contains(p.evaluate(q)));
  }
}

TEST_CASE("printing") {
  CHECK(TPoly().to_string() == "0");
  CHECK(!TPoly({Rational(1), Rational(-1, 2)}).to_string().empty());
}
