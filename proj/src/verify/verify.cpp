#include "knopp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>

#include "knopp/error.hpp"
#include "knopp/extrema.hpp"
#include "knopp/geometry.hpp"

namespace knopp::verify {

bool CriterionResult::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

std::vector<double> alphas(const Options& o, std::vector<double> defaults) {
  if (o.alpha) return {*o.alpha};
  return defaults;
}

void add(CriterionResult& r, const Options& o, Check c) {
  if (o.on_check) o.on_check(c);
  r.checks.push_back(std::move(c));
}

ProbePoint probe(const std::string& spec) { return ProbePoint{parse_point(spec), std::nullopt, spec}; }

std::string summary_text(const Summary& s) {
  if (!s.valid) return "n/a";
  return format("%.3f [%.3f, %.3f]", s.est, s.lo, s.hi);
}

// Both window summaries of one side within tol of the target.
Check exponent_check(const std::string& label, const ExponentTrace& t, double target, double tol) {
  Check c;
  c.name = label + " " + to_string(t.side);
  c.pass = t.weak.valid && t.strong.valid && std::fabs(t.weak.est - target) <= tol &&
           std::fabs(t.strong.est - target) <= tol;
  const Summary reg = regression_exponent(t);
  c.detail = format("E_w %s, E_s %s, target %.3f +- %.2f; regression slope %.3f", summary_text(t.weak).c_str(),
                    summary_text(t.strong).c_str(), target, tol, reg.valid ? reg.est : NAN);
  return c;
}

Check weak_at_most(const std::string& label, const ExponentTrace& t, double bound) {
  Check c;
  c.name = label + " " + to_string(t.side) + " dense";
  c.pass = t.weak.valid && t.weak.est <= bound;
  c.detail = format("E_w %s <= %.2f", summary_text(t.weak).c_str(), bound);
  return c;
}

std::string alpha_label(double a) { return format("alpha=%g", a); }

// F(k / 2^M) by the defining sum in doubles.
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

// sup over d of sum_j t^j min(2^j d, 1/2) / d^alpha, the Hoelder constant of F.
double holder_oracle(double alpha) {
  const double t = std::exp2(-alpha);
  double best = 0;
  for (int i = 1; i <= 4000; ++i) {
    const double d = std::exp2(-i / 100.0);
    double s = 0, tj = 1;
    for (int j = 0; j < 400; ++j, tj *= t) s += tj * std::min(std::ldexp(d, j), 0.5);
    best = std::max(best, s / std::pow(d, alpha));
  }
  return best;
}

}  // namespace

// -- 1, 2, 3: exponent windows ----------------------------------------------------

CriterionResult dyadic_points(const Options& o) {
  CriterionResult r{1, "dyadic points: E(Omega) = 0, E(complement) = 1/alpha - 1", {}};
  const std::vector<std::string> points{"dyadic:1/2^1", "dyadic:1/2^2", "dyadic:3/2^3", "dyadic:5/2^4",
                                        "dyadic:13/2^5"};
  for (double a : alphas(o, {0.3, 0.5, 0.7})) {
    for (const auto& p : points) {
      const auto [om, co] = exponent_traces(probe(p), Alpha(a), 6, 20, o.rel_tol);
      const std::string label = alpha_label(a) + " " + p;
      add(r, o, exponent_check(label, om, 0.0, 0.1));
      add(r, o, exponent_check(label, co, 1 / a - 1, 0.15));
    }
  }
  return r;
}

CriterionResult local_maxima(const Options& o) {
  CriterionResult r{2, "local maxima: E(Omega) = 1/alpha - 1, E(complement) = 0", {}};
  std::vector<std::string> points{"rational:1/3", "rational:2/3", "rational:1/6"};
  std::mt19937_64 rng(o.seed);
  for (int i = 0; i < 3; ++i) {
    const unsigned N = 2 + static_cast<unsigned>(rng() % 6);
    const std::uint64_t k = rng() % (std::uint64_t{1} << N);
    points.push_back(format("smax:%u:%llu:1", N, static_cast<unsigned long long>(k)));
  }
  for (double a : alphas(o, {0.3, 0.5, 0.7})) {
    for (const auto& p : points) {
      const auto [om, co] = exponent_traces(probe(p), Alpha(a), 6, 20, o.rel_tol);
      const std::string label = alpha_label(a) + " " + p;
      add(r, o, exponent_check(label, om, 1 / a - 1, 0.15));
      add(r, o, exponent_check(label, co, 0.0, 0.1));
    }
  }
  return r;
}

CriterionResult non_extrema(const Options& o) {
  CriterionResult r{3, "non-extrema: weak exponents vanish on both sides", {}};
  const double a = o.alpha.value_or(0.5);
  for (const std::string p : {"rational:1/7", "rule:r=2", "rule:s=2"}) {
    const auto [om, co] = exponent_traces(probe(p), Alpha(a), 6, 20, o.rel_tol);
    const std::string label = alpha_label(a) + " " + p;
    add(r, o, weak_at_most(label, om, 0.2));
    add(r, o, weak_at_most(label, co, 0.2));
  }
  return r;
}

// -- 4: D_alpha -------------------------------------------------------------------

CriterionResult d_alpha_subsequence(const Options& o) {
  CriterionResult r{4, "D_alpha point: strong exponents on the construction scales, weak ones vanish", {}};
  const double av = o.alpha.value_or(0.5);
  const Alpha a(av);
  const std::string spec = "rule:r=3,s=3";
  const ProbePoint x0 = probe(spec);
  const std::string label = alpha_label(av) + " " + spec;

  // Both rates exceed 1/alpha: scan far enough that the tail window holds a
  // construction scale.
  const RuleSchedule sched = x0.x.schedule().value_or(RuleSchedule{});
  for (auto [kind, pairs, name] : {std::tuple{RateKind::Dyadic, sched.dyadic, "dyadic"},
                                   std::tuple{RateKind::Maxima, sched.maxima, "maxima"}}) {
    Check c{label + " " + name + " rate", false, "no construction scale"};
    const auto it = std::find_if(pairs.begin(), pairs.end(), [](const ScalePair& p) { return p.start >= 100; });
    if (it != pairs.end()) {
      const std::size_t j_max = it->start * 3 / 2;
      const ApproxRateTrace t = rate_trace(x0.x, kind, j_max, static_cast<mpfr_prec_t>(2 * j_max + 128));
      c.pass = t.limsup.lo > 1 / av;
      c.detail = format("limsup %.3f [%.3f, %.3f] over j <= %zu, needs > %.3f", t.limsup.estimate, t.limsup.lo,
                        t.limsup.hi, j_max, 1 / av);
    }
    add(r, o, c);
  }

  for (Side side : {Side::OmegaComplement, Side::Omega}) {
    const auto ks = strong_scales(x0.x, side, a, 256);
    Check c{label + " " + to_string(side) + " subsequence", false, "fewer than two construction scales"};
    if (ks.size() >= 2) {
      const ExponentTrace t = exponent_trace_on_subsequence(x0, side, a, ks, o.rel_tol);
      std::string ratios;
      for (const auto& e : t.entries) ratios += format(" k=%zu:%.3f", e.k, e.ratio_lo);
      c.pass = t.strong.valid && t.strong.est >= 0.7;
      c.detail = format("E_s %s >= 0.70;%s", summary_text(t.strong).c_str(), ratios.c_str());
    }
    add(r, o, c);
  }

  const auto [om, co] = exponent_traces(x0, a, 6, 20, o.rel_tol);
  add(r, o, weak_at_most(label, om, 0.2));
  add(r, o, weak_at_most(label, co, 0.2));
  return r;
}

// -- 5: p-exponents ---------------------------------------------------------------

CriterionResult p_exponent_relation(const Options& o) {
  CriterionResult r{5, "p-exponents: p u = max of the weak exponents", {}};
  const double av = o.alpha.value_or(0.5);
  const Alpha a(av);
  const std::vector<std::string> points{"dyadic:1/2^1", "dyadic:3/2^3", "dyadic:5/2^4", "rational:1/3",
                                        "rational:1/6",  "smax:3:2:1",   "rational:1/7", "rule:r=2",
                                        "rule:s=2",      "rule:r=3,s=3"};
  for (const auto& p : points) {
    const ProbePoint x0 = probe(p);
    const auto [om, co] = exponent_traces(x0, a, 6, 20, o.rel_tol);
    const double target = std::max(om.weak.est, co.weak.est);
    for (double pp : {1.0, 2.0}) {
      const PExponent u = p_exponent_direct(x0, pp, a, 6, 20, o.rel_tol);
      Check c;
      c.name = format("%s %s p=%g", alpha_label(av).c_str(), p.c_str(), pp);
      c.pass = u.u.valid && om.weak.valid && co.weak.valid && std::fabs(pp * u.u.est - target) <= 0.2;
      c.detail = format("p u = %.3f, max E_w = %.3f, tolerance 0.2", pp * u.u.est, target);
      add(r, o, c);
    }
  }
  return r;
}

// -- 6: box dimension -------------------------------------------------------------

CriterionResult box_dimension_slope(const Options& o) {
  CriterionResult r{6, "box dimension of the graph = 2 - alpha", {}};
  for (double a : alphas(o, {0.3, 0.5, 0.7})) {
    const BoxDimension b = box_dimension(Alpha(a), 4, 16);
    Check c;
    c.name = alpha_label(a) + " box dimension";
    c.pass = b.slope.valid && std::fabs(b.slope.est - (2 - a)) <= 0.1;
    c.detail = format("slope %s, target %.2f +- 0.1, N(16) in [%.0f, %.0f]", summary_text(b.slope).c_str(), 2 - a,
                      b.count_lo.back(), b.count_hi.back());
    add(r, o, c);
  }
  return r;
}

// -- 7: exact values --------------------------------------------------------------

CriterionResult exact_values(const Options& o) {
  CriterionResult r{7, "exact values and dyadic conventions", {}};
  for (double av : alphas(o, {0.3, 0.5, 0.7})) {
    const Alpha a(av);
    const mpfr_prec_t prec = 128;
    const RealBound t = a.t_scale(prec), one(1.0, prec);
    const std::vector<std::tuple<std::string, Rational, RealBound>> cases{
        {"F(0) = 0", Rational(0), RealBound(prec)},
        {"F(1) = 0", Rational(1), RealBound(prec)},
        {"F(1/2) = 1/2", Rational(1, 2), RealBound(0.5, prec)},
        {"F(1/4) = 1/4 + t/2", Rational(1, 4), RealBound(0.25, prec) + t.scaled(-1)},
        {"F(1/3) = 1/(3(1-t))", Rational(1, 3), one / ((one - t) * RealBound(3.0, prec))},
    };
    for (const auto& [name, x, expected] : cases) {
      const RealBound f = eval_F(DigitStream::from_rational(x), a, 1e-13);
      Check c;
      c.name = alpha_label(av) + " " + name;
      c.pass = f.width_d() <= 1e-12 && f.overlaps(expected);
      c.detail = format("[%.17g, %.17g] vs %.17g", f.lower_d(), f.upper_d(), expected.mid_d());
      add(r, o, c);
    }
    std::mt19937_64 rng(o.seed);
    int agree = 0;
    for (int i = 0; i < 100; ++i) {
      const unsigned N = 1 + static_cast<unsigned>(rng() % 48);
      const Integer K = (Integer(static_cast<unsigned long>(rng() % (std::uint64_t{1} << N))) << 1) + 1;
      const RealBound fz = eval_F(DigitStream::finite_dyadic(K, N + 1, DyadicConvention::TerminatingZeros), a, 1e-12);
      const RealBound fo = eval_F(DigitStream::finite_dyadic(K, N + 1, DyadicConvention::TerminatingOnes), a, 1e-12);
      if (fz.width_d() <= 1e-12 && fo.width_d() <= 1e-12 && fz.overlaps(fo)) ++agree;
    }
    add(r, o, Check{alpha_label(av) + " dyadic conventions agree", agree == 100, format("%d / 100 dyadics", agree)});
  }
  return r;
}

// -- 8: extrema oracle ------------------------------------------------------------

CriterionResult extrema_oracle(const Options& o) {
  CriterionResult r{8, "interval extrema match the 2^-24 grid; X(p) = 1 - X(-p)", {}};
  constexpr int M = 24, B = 8;
  for (double av : alphas(o, {0.3, 0.5, 0.7})) {
    const Alpha a(av);
    const double t = a.t_scale_d();
    // Per level-8 block extremes of the grid, endpoints included.
    const std::uint64_t per = std::uint64_t{1} << (M - B);
    std::vector<double> blo(1u << B, 1e300), bhi(1u << B, -1e300);
    for (std::uint64_t b = 0; b < (1u << B); ++b) {
      for (std::uint64_t i = 0; i <= per; ++i) {
        const std::uint64_t k = b * per + i;
        const double v = k == (std::uint64_t{1} << M) ? 0.0 : grid_F(k, M, t);
        blo[b] = std::min(blo[b], v);
        bhi[b] = std::max(bhi[b], v);
      }
    }
    // The grid misses a maximum by at most the Hoelder constant times half a step.
    const double tol = 1.05 * holder_oracle(av) * std::exp2(-(M + 1) * av) + 1e-12;
    std::size_t bad = 0, total = 0;
    double worst_min = 0, worst_max = 0;
    for (unsigned N = 0; N <= B; ++N) {
      const std::size_t span = std::size_t{1} << (B - N);
      for (long k = 0; k < (1L << N); ++k) {
        const double glo = *std::min_element(blo.begin() + k * span, blo.begin() + (k + 1) * span);
        const double ghi = *std::max_element(bhi.begin() + k * span, bhi.begin() + (k + 1) * span);
        const DyadicInterval I(k, N);
        const double mn = min_on_interval(I, a).value.evaluate(a.t_scale()).mid_d();
        const double mx = max_on_interval(I, a).mid_d();
        worst_min = std::max(worst_min, std::fabs(mn - glo));
        worst_max = std::max(worst_max, std::fabs(mx - ghi));
        ++total;
        if (std::fabs(mn - glo) > 1e-12 || mx < ghi - 1e-12 || mx > ghi + tol) ++bad;
      }
    }
    add(r, o,
        Check{alpha_label(av) + " grid oracle", bad == 0,
              format("%zu / %zu intervals off; worst |min - grid| %.2e, worst |max - grid| %.2e (tolerance %.2e)",
                     bad, total, worst_min, worst_max, tol)});

    std::size_t asym = 0, tried = 0;
    for (unsigned N = 1; N <= B; ++N) {
      for (long k = 0; k < (1L << N); ++k) {
        const TPoly P = dyadic_slope_poly(k, N);
        auto neg = maxima_positions(SlopeArgument{-P, N}, a);
        for (auto& x : neg) x = 1 - x;
        std::sort(neg.begin(), neg.end());
        ++tried;
        if (maxima_positions(SlopeArgument{P, N}, a) != neg) ++asym;
      }
    }
    add(r, o,
        Check{alpha_label(av) + " X(p) symmetry", asym == 0, format("%zu / %zu slope arguments asymmetric", asym, tried)});
  }
  return r;
}

// -- 9: invariants ----------------------------------------------------------------

CriterionResult invariant_suite(const Options& o) {
  CriterionResult r{9, "slope bound, d_n recurrence, additivity, Hoelder probe", {}};
  std::mt19937_64 rng(o.seed);
  const auto as = alphas(o, {0.3, 0.5, 0.7});

  {
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
      const Alpha a(as[static_cast<std::size_t>(i) % as.size()]);
      std::vector<Bit> bits(64);
      for (auto& b : bits) b = rng() & 1;
      const std::size_t n = 1 + rng() % 60;
      const RealBound c = slope_value(DigitStream::truncated(bits), n - 1, a);
      const RealBound tl = a.t_slope();
      RealBound tn(1.0);
      for (std::size_t j = 0; j < n; ++j) tn = tn * tl;
      const RealBound bound = tn / (tl - RealBound(1.0));
      if (!abs(c).certainly_less_equal(bound)) ++bad;
    }
    add(r, o, Check{"slope bound |C_{n-1}| <= 2^(n(1-alpha)) / (2^(1-alpha) - 1)", bad == 0,
                    format("%zu / 10000 random (x, n) violate", bad)});
  }

  {
    const TPoly q = TPoly::monomial(1, 1);
    bool recurrence = true, positive = true;
    for (std::size_t n = 0; n < 50; ++n) recurrence = recurrence && d_sequence(n + 1) == q - d_sequence(n).shifted(1);
    for (double av : as) {
      const RealBound qv = exp2(RealBound(av - 1));
      for (std::size_t n = 0; n <= 50; ++n) positive = positive && d_sequence(n).evaluate(qv).certainly_positive();
    }
    add(r, o, Check{"d_n recurrence d_{n+1} = q - q d_n (exact, n < 50)", recurrence,
                    recurrence ? "holds as polynomial identities" : "violated"});
    add(r, o, Check{"d_n positive for n <= 50", positive,
                    format("%zu alpha values, brackets certainly positive: %s", as.size(), positive ? "yes" : "no")});
  }

  {
    std::size_t bad = 0;
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
      const double av = as[static_cast<std::size_t>(i) % as.size()];
      const long q = 1 + static_cast<long>(rng() % 97);
      Rational x(static_cast<long>(rng() % static_cast<std::uint64_t>(q + 1)), q);
      x.canonicalize();
      const std::size_t k = 2 + rng() % 9;
      const ProbePoint x0{DigitStream::from_rational(x), std::nullopt, x.get_str()};
      const BoxProbe probe(x0, Alpha(av), k, o.rel_tol);
      MeasureOptions mo;
      mo.rel_tol = o.rel_tol;
      const BoxMeasure m = probe.measure_k(k, Target::Area, mo);
      const double area = m.omega.area;
      const double lo = m.omega.lower + m.complement.lower, hi = m.omega.upper + m.complement.upper;
      const double gap = hi - lo;
      worst = std::max(worst, gap / area);
      if (m.omega.flag != MeasureFlag::Ok || lo > area * (1 + 1e-12) || hi < area * (1 - 1e-12) ||
          gap > 2 * o.rel_tol * area)
        ++bad;
    }
    add(r, o, Check{"measure additivity on 50 random probes", bad == 0,
                    format("%zu / 50 fail; worst gap / area %.2e <= %.2e", bad, worst, 2 * o.rel_tol)});
  }

  for (double av : as) {
    const Alpha a(av);
    double lo = 1e300, hi = 0;
    bool finite = true;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const HolderProbe h = holder_probe(a, 100000, o.seed + s);
      finite = finite && std::isfinite(h.constant) && h.constant > 0;
      lo = std::min(lo, h.constant);
      hi = std::max(hi, h.constant);
    }
    const double cap = holder_oracle(av);
    add(r, o,
        Check{alpha_label(av) + " Hoelder probe", finite && (hi - lo) / hi < 0.2 && hi <= cap * (1 + 1e-9),
              format("constants in [%.4f, %.4f] over 3 seeds, oracle supremum %.4f", lo, hi, cap)});
  }
  return r;
}

// -- suites -----------------------------------------------------------------------

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"dyadic",    "maxima", "nonextremum", "dalpha",
                                              "pexponent", "boxdim", "invariants",  "all"};
  return names;
}

std::vector<int> suite_criteria(std::string_view suite) {
  if (suite == "dyadic") return {1};
  if (suite == "maxima") return {2};
  if (suite == "nonextremum") return {3};
  if (suite == "dalpha") return {4};
  if (suite == "pexponent") return {5};
  if (suite == "boxdim") return {6};
  if (suite == "invariants") return {7, 8, 9};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
  throw OutOfDomain("unknown suite '" + std::string(suite) + "'");
}

CriterionResult run_criterion(int id, const Options& o) {
  switch (id) {
    case 1: return dyadic_points(o);
    case 2: return local_maxima(o);
    case 3: return non_extrema(o);
    case 4: return d_alpha_subsequence(o);
    case 5: return p_exponent_relation(o);
    case 6: return box_dimension_slope(o);
    case 7: return exact_values(o);
    case 8: return extrema_oracle(o);
    case 9: return invariant_suite(o);
  }
  throw OutOfDomain("no criterion " + std::to_string(id));
}

}  // namespace knopp::verify
