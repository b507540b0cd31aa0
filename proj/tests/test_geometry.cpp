#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "knopp/error.hpp"
#include "knopp/geometry.hpp"

using namespace knopp;

namespace {

Rational rat(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

ProbePoint point(const char* spec) { return ProbePoint{parse_point(spec), std::nullopt, spec}; }

// F(k / 2^M) by the defining sum.
double grid_F(std::uint64_t k, int M, double t) {
  double s = 0, tj = 1;
  for (int j = 0; j < M; ++j) {
    const std::uint64_t period = std::uint64_t{1} << (M - j);
    const std::uint64_t m = k & (period - 1);
    s += tj * static_cast<double>(std::min(m, period - m)) / static_cast<double>(period);
    tj *= t;
  }
  return s;
}

// Mean over u in [0, 1] of clamp(a + (b - a) u, lo, hi) - lo.
double clipped_mean(double a, double b, double lo, double hi) {
  if (a > b) std::swap(a, b);
  if (b <= lo) return 0;
  if (a >= hi) return hi - lo;
  if (a == b) return std::clamp(a, lo, hi) - lo;
  const double ua = std::clamp((lo - a) / (b - a), 0.0, 1.0);
  const double ub = std::clamp((hi - a) / (b - a), 0.0, 1.0);
  // Below lo on [0, ua], linear on [ua, ub], at hi on [ub, 1].
  const double mid = (ub - ua) * ((a + (b - a) * (ua + ub) / 2) - lo);
  return mid + (1 - ub) * (hi - lo);
}

struct Oracle {
  double omega = 0;
  double error = 0;  // certified up to double rounding
  double area = 0;
};

// Area of Omega in [x0 - r, x0 + r] x [y0 - r, y0 + r] on the 2^-M grid. On each
// cell F lies between the chord and the chord plus t^M max F, with mean offset
// t^M / (4 (1 - t)); cells that cross the box edges add their full spread to
// the error.
Oracle grid_oracle(std::uint64_t k0, std::uint64_t k1, int M, double y0, double r, double alpha) {
  const double t = std::exp2(-alpha);
  const double tm = std::pow(t, M), spread = tm / (3 * (1 - t)), shift = tm / (4 * (1 - t));
  const double w = std::ldexp(1.0, -M);
  const double yb = std::max(0.0, y0 - r), yt = y0 + r;
  Oracle o;
  // The box is clipped in x only; below y = 0 lies the complement.
  o.area = static_cast<double>(k1 - k0) * w * 2 * r;
  double fa = grid_F(k0, M, t);
  for (std::uint64_t k = k0; k < k1; ++k) {
    const double fb = k + 1 == (std::uint64_t{1} << M) ? 0.0 : grid_F(k + 1, M, t);
    const double lmin = std::min(fa, fb), lmax = std::max(fa, fb);
    if (lmin >= yt) {
      o.omega += w * (yt - yb);
    } else if (lmax + spread <= yb) {
    } else if (lmin >= yb && lmax + spread <= yt) {
      o.omega += w * ((fa + fb) / 2 + shift - yb);
    } else {
      o.omega += w * clipped_mean(fa + shift, fb + shift, yb, yt);
      o.error += w * spread;
    }
    fa = fb;
  }
  return o;
}

void check_against(const MeasureBound& m, double value, double error) {
  const double slack = 1e-12 * m.area + error;
  CHECK(m.lower <= value + slack);
  CHECK(m.upper >= value - slack);
}

}  // namespace

TEST_CASE("measure brackets the grid oracle at (1/2, 1/2), r = 2^-4") {
  const Alpha a(0.5);
  const int M = 22;
  const std::uint64_t k0 = 7ull << (M - 4), k1 = 9ull << (M - 4);  // [7/16, 9/16]
  const Oracle o = grid_oracle(k0, k1, M, 0.5, 1.0 / 16, 0.5);
  const double comp = o.area - o.omega;
  CHECK(o.error < 0.01 * comp);
  const MeasureBound m = measure_in_box(point("dyadic:1/2^1"), rat(1, 16), Side::OmegaComplement, a, 1e-4);
  CHECK(m.flag == MeasureFlag::Ok);
  check_against(m, comp, o.error);
  CHECK(m.area == doctest::Approx(o.area).epsilon(1e-15));
}

TEST_CASE("measure brackets the grid oracle on 50 random probes") {
  std::mt19937_64 rng(17);
  const int M = 20;
  for (int i = 0; i < 50; ++i) {
    const double av = std::vector<double>{0.3, 0.5, 0.7}[i % 3];
    const Alpha a(av);
    const unsigned kx = 1 + static_cast<unsigned>(rng() % 9);
    const long K = static_cast<long>(rng() % ((1ull << kx) + 1));
    const std::size_t k = 3 + rng() % 5;
    const Rational x = rat(K, 1L << kx);
    const Rational r = rat(1, 1L << k);
    const ProbePoint x0{DigitStream::from_rational(x), std::nullopt, ""};
    const BoxProbe probe(x0, a, k, 1e-3);
    MeasureOptions opts;
    const BoxMeasure m = probe.measure(r, Target::Area, opts);
    const std::uint64_t kc = static_cast<std::uint64_t>(std::max(0L, (K << (M - kx)) - (1L << (M - k))));
    const std::uint64_t kd =
        static_cast<std::uint64_t>(std::min(1L << M, (K << (M - kx)) + (1L << (M - k))));
    const double y0 = K == (1L << kx) ? 0.0 : grid_F(static_cast<std::uint64_t>(K) << (M - kx), M, a.t_scale_d());
    const Oracle o = grid_oracle(kc, kd, M, y0, r.get_d(), av);
    CAPTURE(i);
    CAPTURE(x.get_str());
    CAPTURE(k);
    CHECK(m.omega.flag == MeasureFlag::Ok);
    check_against(m.omega, o.omega, o.error);
    check_against(m.complement, o.area - o.omega, o.error);
  }
}

TEST_CASE("additivity and bracket sanity") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    const double av = std::vector<double>{0.3, 0.5, 0.7}[i % 3];
    const long q = 1 + static_cast<long>(rng() % 97);
    const Rational x = rat(static_cast<long>(rng() % static_cast<std::uint64_t>(q + 1)), q);
    const std::size_t k = 2 + rng() % 7;
    const BoxProbe probe(ProbePoint{DigitStream::from_rational(x), std::nullopt, ""}, Alpha(av), k, 1e-3);
    MeasureOptions opts;
    const BoxMeasure m = probe.measure_k(k, Target::Area, opts);
    const double area = m.omega.area;
    CAPTURE(x.get_str());
    CAPTURE(k);
    CHECK(m.omega.flag == MeasureFlag::Ok);
    for (const MeasureBound* b : {&m.omega, &m.complement}) {
      CHECK(b->lower >= 0);
      CHECK(b->lower <= b->upper);
      CHECK(b->upper <= area * (1 + 1e-12));
    }
    CHECK(m.omega.lower + m.complement.lower <= area * (1 + 1e-12));
    CHECK(m.omega.upper + m.complement.upper >= area * (1 - 1e-12));
    CHECK((m.omega.upper + m.complement.upper) - (m.omega.lower + m.complement.lower) <= 2e-3 * area);
  }
}

TEST_CASE("measure is monotone in the radius") {
  for (const char* spec : {"dyadic:3/2^3", "rational:1/3", "rule:r=2"}) {
    const BoxProbe probe(point(spec), Alpha(0.5), 12, 1e-3);
    MeasureOptions opts;
    std::vector<Rational> radii;
    for (long k = 12; k >= 3; --k) {
      radii.push_back(rat(1, 1L << k));
      radii.push_back(rat(3, 1L << (k + 1)));
    }
    std::sort(radii.begin(), radii.end());
    BoxMeasure prev = probe.measure(radii.front(), Target::Smaller, opts);
    for (std::size_t i = 1; i < radii.size(); ++i) {
      const BoxMeasure cur = probe.measure(radii[i], Target::Smaller, opts);
      CAPTURE(spec);
      CHECK(prev.omega.lower <= cur.omega.upper);
      CHECK(prev.complement.lower <= cur.complement.upper);
      prev = cur;
    }
  }
}

TEST_CASE("a box over the whole graph measures the integral of F") {
  for (double av : {0.3, 0.5, 0.7}) {
    const Alpha a(av);
    const double t = a.t_scale_d();
    // X0 = (1/2, 1) with r = 1 covers [0, 1] x [0, 2], above max F for these alpha.
    const ProbePoint x0{parse_point("dyadic:1/2^1"), RealBound(1.0), "top"};
    const MeasureBound m = measure_in_box(x0, Rational(1), Side::Omega, a, 1e-6);
    const double integral = 1 / (4 * (1 - t));
    CHECK(m.lower <= integral * (1 + 1e-12));
    CHECK(m.upper >= integral * (1 - 1e-12));
    CHECK(m.upper - m.lower <= 1e-5 * integral);
    CHECK(m.area == doctest::Approx(2.0));
  }
}

TEST_CASE("the upper half box above a global maximum lies in the complement") {
  const Alpha a(0.5);
  for (long k : {2, 3, 6, 10}) {
    const Rational r = rat(1, 1L << k);
    const MeasureBound m = measure_in_box(point("rational:1/3"), r, Side::OmegaComplement, a);
    CHECK(m.lower >= 2 * r.get_d() * r.get_d());
  }
}

TEST_CASE("boxes at the ends of [0, 1] are clipped") {
  const Alpha a(0.5);
  const MeasureBound m = measure_in_box(point("dyadic:0/2^1"), rat(1, 64), Side::Omega, a);
  // [0, r] x [0, r]: y0 - r is clipped by the strip only in x.
  CHECK(m.area == doctest::Approx(2.0 / (64.0 * 64.0)));
  CHECK(m.lower > 0);
  CHECK_THROWS_AS(measure_in_box(point("dyadic:1/2^1"), Rational(0), Side::Omega, a), OutOfDomain);
  const BoxProbe probe(point("dyadic:1/2^1"), a, 8);
  CHECK_THROWS_AS(probe.measure_k(9, Target::Smaller, MeasureOptions{}), DepthExceeded);
}

TEST_CASE("ratio traces") {
  const Alpha a(0.5);
  const auto [om, co] = exponent_traces(point("dyadic:1/2^1"), a, 6, 14);
  CHECK(om.window == 3);
  REQUIRE(om.entries.size() == 9);
  for (const ExponentTrace* t : {&om, &co}) {
    for (const TraceEntry& e : t->entries) {
      CHECK(e.ratio_lo <= e.ratio_hi);
      // meas <= (2r)^2 forces ratio >= -log 4 / log(1/r).
      CHECK(e.ratio_lo >= -2.0 / static_cast<double>(e.k) - 1e-9);
    }
    CHECK(t->weak.valid);
    CHECK(t->weak.est <= t->strong.est + 1e-9);
  }
  // Near a minimum Omega fills the box but for a thin cusp: ratio close to -2 / k.
  for (const TraceEntry& e : om.entries) CHECK(std::fabs(e.ratio_lo + 2.0 / static_cast<double>(e.k)) < 1e-3);
  // The single-side trace agrees with the paired one.
  const ExponentTrace single = exponent_trace(point("dyadic:1/2^1"), Side::OmegaComplement, a, 6, 14);
  for (std::size_t i = 0; i < single.entries.size(); ++i) {
    CHECK(single.entries[i].measure.lower <= co.entries[i].measure.upper);
    CHECK(co.entries[i].measure.lower <= single.entries[i].measure.upper);
  }
}

TEST_CASE("dyadic point exponents") {
  const Alpha a(0.5);
  const auto [om, co] = exponent_traces(point("dyadic:1/2^1"), a, 6, 20);
  // The window summaries carry the finite-k constant; the regression slope does not.
  CHECK(std::fabs(om.weak.est) <= 0.13);
  CHECK(co.weak.est == doctest::Approx(1.19).epsilon(0.02));
  CHECK(std::fabs(regression_exponent(co).est - 1.0) < 0.05);
  CHECK(std::fabs(regression_exponent(om).est) < 0.01);
}

TEST_CASE("strong exponents stay below 1/alpha - 1 at deep radii") {
  const Alpha a(0.5);
  const ExponentTrace co = exponent_trace_on_subsequence(point("dyadic:1/2^1"), Side::OmegaComplement, a, {30, 36});
  for (const TraceEntry& e : co.entries) CHECK(e.ratio_lo <= 1.0 + 0.15);
}

TEST_CASE("subsequence entries equal dense entries at shared radii") {
  const Alpha a(0.5);
  const ProbePoint x0 = point("rule:r=3,s=3");
  const ExponentTrace dense = exponent_trace(x0, Side::Omega, a, 6, 12);
  const ExponentTrace sub = exponent_trace_on_subsequence(x0, Side::Omega, a, {8, 11});
  REQUIRE(sub.entries.size() == 2);
  // The nominal centre of a non-terminating x depends on the deepest radius,
  // so the brackets agree to within the tolerance rather than bit for bit.
  for (const TraceEntry& e : sub.entries) {
    const TraceEntry& d = dense.entries[e.k - 6];
    CHECK(d.k == e.k);
    CHECK(d.measure.lower <= e.measure.upper);
    CHECK(e.measure.lower <= d.measure.upper);
    CHECK(std::fabs(d.ratio_lo - e.ratio_lo) < 1e-3);
  }
  CHECK(sub.window == 1);
  const ExponentTrace exact_dense = exponent_trace(point("rational:1/7"), Side::Omega, a, 6, 12);
  const ExponentTrace exact_sub = exponent_trace_on_subsequence(point("rational:1/7"), Side::Omega, a, {8, 11});
  for (const TraceEntry& e : exact_sub.entries) {
    const TraceEntry& d = exact_dense.entries[e.k - 6];
    CHECK(d.measure.lower == e.measure.lower);
    CHECK(d.measure.upper == e.measure.upper);
  }
  CHECK_THROWS_AS(exponent_trace_on_subsequence(x0, Side::Omega, a, {11, 8}), OutOfDomain);
}

TEST_CASE("construction scales") {
  const Alpha a(0.5);
  const DigitStream x = parse_point("rule:r=3,s=3");
  CHECK(strong_scales(x, Side::OmegaComplement, a, 256) == std::vector<std::size_t>{8, 80});
  CHECK(strong_scales(x, Side::Omega, a, 256) == std::vector<std::size_t>{26, 242});
  CHECK(strong_scales(parse_point("rational:1/3"), Side::Omega, a, 256).empty());
  // r = 2 at alpha = 1/2: alpha J' never clears J, so there is no extremum-like radius.
  CHECK(strong_scales(parse_point("rule:r=2"), Side::OmegaComplement, a, 256).empty());
}

TEST_CASE("optimal p-means") {
  for (double m : {0.0, 0.01, 0.2, 0.5, 0.9, 1.0}) {
    CHECK(optimal_p_mean(m, 1) == doctest::Approx(std::min(m, 1 - m)));
    CHECK(optimal_p_mean(m, 2) == doctest::Approx(std::sqrt(m * (1 - m))));
    for (double p : {1.5, 3.0}) {
      double best = 1e9;
      for (int i = 0; i <= 20000; ++i) {
        const double c = i / 20000.0;
        best = std::min(best, std::pow(std::pow(c, p) * (1 - m) + std::pow(1 - c, p) * m, 1 / p));
      }
      CHECK(optimal_p_mean(m, p) == doctest::Approx(best).epsilon(1e-6));
    }
  }
  // m = 1/2 at every scale: the value is 1/2 for every p, so u -> 0.
  for (double p : {1.0, 2.0, 4.0}) CHECK(optimal_p_mean(0.5, p) == doctest::Approx(0.5));
  CHECK_THROWS_AS(optimal_p_mean(0.3, 0.5), OutOfDomain);
}

TEST_CASE("p-exponent at a dyadic point") {
  const Alpha a(0.5);
  const PExponent pe = p_exponent_direct(point("dyadic:1/2^1"), 2, a, 6, 20);
  REQUIRE(pe.u.valid);
  CHECK(std::fabs(pe.u.est - 0.5) <= 0.15);
  const auto [om, co] = exponent_traces(point("dyadic:1/2^1"), a, 6, 20);
  CHECK(std::fabs(2 * pe.u.est - std::max(om.weak.est, co.weak.est)) <= 0.2);
  CHECK_THROWS_AS(p_exponent_direct(point("dyadic:1/2^1"), 0.5, a, 6, 8), OutOfDomain);
}

TEST_CASE("box dimension") {
  for (double av : {0.5, 0.8}) {
    const BoxDimension b = box_dimension(Alpha(av), 4, 14);
    for (std::size_t i = 0; i < b.ks.size(); ++i) {
      CHECK(b.count_lo[i] >= std::ldexp(1.0, static_cast<int>(b.ks[i])));
      CHECK(b.count_lo[i] <= b.count_hi[i]);
    }
    CHECK(std::fabs(b.slope.est - (2 - av)) <= 0.1);
  }
  CHECK_THROWS_AS(box_dimension(Alpha(0.5), 8, 8), OutOfDomain);
}

TEST_CASE("mean value witnesses") {
  const Alpha a(0.5);
  const ProbePoint x0 = point("rule:r=2");
  const RealBound f0 = eval_F(x0.x, a, 1e-20);
  for (std::size_t n = 0; n < 5; ++n) {
    const Witness w = mean_value_witness(x0, Direction::Below, n, a);
    const double dist = std::fabs(w.x.get_d() - x0.x.exact_value().value_or(Rational(0)).get_d());
    CHECK(w.gap.certainly_positive());
    CHECK(w.gap.lower_d() >= std::pow(2.0, -0.5 * static_cast<double>(w.J)) / 64 * (1 - 1e-12));
    // The witness really sits below F(x0).
    const RealBound fw = eval_F(DigitStream::from_rational(w.x), a, 1e-20);
    CHECK((f0 - fw).lower_d() >= w.gap.lower_d() * (1 - 1e-9));
    (void)dist;
  }
  CHECK_THROWS_AS(mean_value_witness(point("rational:1/3"), Direction::Above, 3, a), WitnessNotFound);
  CHECK_THROWS_AS(mean_value_witness(point("dyadic:0/2^1"), Direction::Below, 3, a), WitnessNotFound);
}

TEST_CASE("csv rows are deterministic and well formed") {
  const Alpha a(0.5);
  auto render = [&] {
    std::ostringstream os;
    write_csv_header(os);
    const auto [om, co] = exponent_traces(point("rational:1/7"), a, 4, 8);
    write_csv_rows(os, om);
    write_csv_rows(os, co);
    return os.str();
  };
  const std::string a1 = render(), a2 = render();
  CHECK(a1 == a2);
  std::istringstream in(a1);
  std::string line;
  std::getline(in, line);
  CHECK(line == "side,k,r,meas_lo,meas_hi,ratio_lo,ratio_hi,flag");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == 8);
    CHECK((cols[0] == "omega" || cols[0] == "omega_c"));
    CHECK(std::stod(cols[3]) <= std::stod(cols[4]));
    CHECK(std::stod(cols[5]) <= std::stod(cols[6]));
    CHECK(cols[7] == "ok");
  }
  CHECK(rows == 10);
}
