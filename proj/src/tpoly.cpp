#include "knopp/tpoly.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace knopp {

TPoly::TPoly(std::initializer_list<Rational> coefficients) : coefficients_(coefficients) {
  for (auto& c : coefficients_) c.canonicalize();
  trim();
}

TPoly::TPoly(std::vector<Rational> coefficients) : coefficients_(std::move(coefficients)) {
  for (auto& c : coefficients_) c.canonicalize();
  trim();
}

TPoly TPoly::monomial(std::size_t power, const Rational& c) {
  TPoly p;
  p.add_term(power, c);
  return p;
}

Rational TPoly::coefficient(std::size_t power) const {
  return power < coefficients_.size() ? coefficients_[power] : Rational(0);
}

void TPoly::add_term(std::size_t power, const Rational& c) {
  if (c == 0) return;
  if (coefficients_.size() <= power) coefficients_.resize(power + 1);
  coefficients_[power] += c;
  trim();
}

TPoly& TPoly::operator+=(const TPoly& rhs) {
  if (coefficients_.size() < rhs.coefficients_.size()) coefficients_.resize(rhs.coefficients_.size());
  for (std::size_t j = 0; j < rhs.coefficients_.size(); ++j) coefficients_[j] += rhs.coefficients_[j];
  trim();
  return *this;
}

TPoly& TPoly::operator-=(const TPoly& rhs) {
  if (coefficients_.size() < rhs.coefficients_.size()) coefficients_.resize(rhs.coefficients_.size());
  for (std::size_t j = 0; j < rhs.coefficients_.size(); ++j) coefficients_[j] -= rhs.coefficients_[j];
  trim();
  return *this;
}

TPoly& TPoly::operator*=(const Rational& s) {
  for (auto& c : coefficients_) c *= s;
  trim();
  return *this;
}

TPoly TPoly::operator-() const {
  TPoly r = *this;
  for (auto& c : r.coefficients_) c = -c;
  return r;
}

TPoly TPoly::shifted(std::size_t k) const {
  if (is_zero()) return {};
  std::vector<Rational> c(k);
  c.insert(c.end(), coefficients_.begin(), coefficients_.end());
  return TPoly(std::move(c));
}

TPoly operator*(const TPoly& a, const TPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<Rational> c(a.coefficients_.size() + b.coefficients_.size() - 1);
  for (std::size_t i = 0; i < a.coefficients_.size(); ++i) {
    if (a.coefficients_[i] == 0) continue;
    for (std::size_t j = 0; j < b.coefficients_.size(); ++j) c[i + j] += a.coefficients_[i] * b.coefficients_[j];
  }
  return TPoly(std::move(c));
}

RealBound TPoly::evaluate(const RealBound& t) const {
  const mpfr_prec_t prec = t.precision();
  RealBound acc(prec);
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    acc *= t;
    acc += RealBound::from_rational(*it, prec);
  }
  return acc;
}

Rational TPoly::evaluate(const Rational& t) const {
  Rational acc = 0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * t + *it;
  acc.canonicalize();
  return acc;
}

std::string TPoly::to_string(const std::string& var) const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) {
    const Rational& c = coefficients_[j];
    if (c == 0) continue;
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    os << Rational(abs(c)).get_str();
    if (j >= 1) os << "*" << var;
    if (j >= 2) os << "^" << j;
  }
  return os.str();
}

void TPoly::trim() {
  while (!coefficients_.empty() && coefficients_.back() == 0) coefficients_.pop_back();
}

}  // namespace knopp
