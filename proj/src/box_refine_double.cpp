#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <cmath>
#include <vector>

#include "box_refine.hpp"

namespace knopp::detail {

namespace {

// One ulp toward -inf / +inf; infinities and NaN pass through.
inline double up(double x) {
  if (!(x < HUGE_VAL)) return x;
  if (x == 0) return std::numeric_limits<double>::denorm_min();
  auto b = std::bit_cast<std::uint64_t>(x);
  b = x > 0 ? b + 1 : b - 1;
  return std::bit_cast<double>(b);
}
inline double dn(double x) { return -up(-x); }

// Closed interval of doubles; every operation widens by one ulp each way.
struct DI {
  double lo = 0, hi = 0;
  static DI pt(double x) { return {x, x}; }
  static DI of(const RealBound& b) { return {b.lower_d(), b.upper_d()}; }
};

DI operator+(DI a, DI b) { return {dn(a.lo + b.lo), up(a.hi + b.hi)}; }
DI operator-(DI a, DI b) { return {dn(a.lo - b.hi), up(a.hi - b.lo)}; }
DI operator*(DI a, DI b) {
  const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {dn(*std::min_element(p, p + 4)), up(*std::max_element(p, p + 4))};
}
// b must not contain zero.
DI operator/(DI a, DI b) {
  const double p[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
  return {dn(*std::min_element(p, p + 4)), up(*std::max_element(p, p + 4))};
}
DI scaled(DI a, int e) { return {dn(std::ldexp(a.lo, e)), up(std::ldexp(a.hi, e))}; }
// Multiplication by a positive power of two m.
DI times_pow2(DI a, double m) { return {dn(a.lo * m), up(a.hi * m)}; }
DI imin(DI a, DI b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }
DI imax(DI a, DI b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }
DI clamp0(DI a, DI hi) { return imin(imax(a, DI{}), hi); }

// Directed-rounding accumulator for sums of doubles.
class Acc {
 public:
  Acc(mpfr_prec_t prec, mpfr_rnd_t rnd) : rnd_(rnd) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
  }
  ~Acc() { mpfr_clear(v_); }
  Acc(const Acc&) = delete;
  Acc& operator=(const Acc&) = delete;
  void add(double x) { mpfr_add_d(v_, v_, x, rnd_); }
  void reset() { mpfr_set_zero(v_, 1); }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
  mpfr_rnd_t rnd_;
};

struct Node {
  DI Fa, C;
  DI u0, u1;  // covered part in local coordinates
  unsigned N = 0;
  double lo = 0, hi = 0, gap = 0;
  bool full() const { return u0.lo == 0 && u0.hi == 0 && u1.lo == 1 && u1.hi == 1; }
};

// The scale tables, the maximum of F + p x and the box edges in double intervals.
class Tables {
 public:
  Tables(const KnoppTables& T, std::size_t cap) : tl_d(T.alpha().t_slope_d()) {
    for (std::size_t n = 0; n <= cap + 1; ++n) {
      ts.push_back(DI::of(T.scale_pow(n)));
      tl.push_back(DI::of(T.slope_pow(n)));
      p2.push_back(std::ldexp(1.0, -static_cast<int>(n)));
    }
    fmax = DI::of(T.global_max());
    mean = DI::of(T.mean());
    third = DI::of(RealBound::from_rational(Rational(1, 3), T.precision()));
    const std::size_t n_cand = static_cast<std::size_t>(std::ceil(std::log(4.0) / std::log(tl_d))) + 64;
    for (std::size_t N = 0; N <= n_cand; ++N) cand.push_back(DI::of(T.candidate(N)));
  }

  // max_x F(x) + p x; non-decreasing in p.
  DI max_value(DI p) const { return {max_point(p.lo).lo, max_point(p.hi).hi}; }

  std::vector<DI> ts, tl, cand;
  std::vector<double> p2;  // 2^-n
  DI fmax, mean, third;

 private:
  DI max_point(double p) const {
    if (p > 0) return DI::pt(p) + max_point(-p);
    const double q = -p;
    const double v = std::log1p(q * (tl_d - 1)) / std::log(tl_d);
    const std::size_t n_star = (!std::isfinite(v) || v < 0) ? 0 : static_cast<std::size_t>(v);
    const std::size_t first = n_star >= 2 ? n_star - 2 : 0;
    DI best{-HUGE_VAL, -HUGE_VAL};
    for (std::size_t N = first; N <= n_star + 2; ++N) {
      if (N >= cand.size()) return {-HUGE_VAL, HUGE_VAL};
      best = imax(best, cand[N] + DI::pt(p) * scaled(third, -static_cast<int>(N)));
    }
    return best;
  }

  double tl_d;
};

// Integral over u in [p, q] of clamp(v, lo, hi) - lo for v linear from vp to vq,
// all points; the result encloses the exact value.
DI clip_linear(double p, double q, double vp, double vq, double lo, double hi) {
  if (!(p < q)) return {};
  const DI len = DI::pt(q) - DI::pt(p);
  const double a = std::min(vp, vq), b = std::max(vp, vq);
  if (b <= lo) return {};
  if (hi <= a) return len * (DI::pt(hi) - DI::pt(lo));
  if (a == b) return len * (DI::pt(a) - DI::pt(lo));
  const double z1 = std::max(lo, a), z2 = std::min(b, hi);
  const DI span = DI::pt(b) - DI::pt(a);
  DI mean = (DI::pt(z2) - DI::pt(z1)) / span * (times_pow2(DI::pt(z1) + DI::pt(z2), 0.5) - DI::pt(lo));
  if (hi < b) mean = mean + (DI::pt(b) - DI::pt(hi)) / span * (DI::pt(hi) - DI::pt(lo));
  return imax(len * mean, DI{});
}

class Refiner {
 public:
  Refiner(const Tables& t, DI yb, DI yt) : t(t), yb(yb), yt(yt) {}

  bool evaluate(Node& n) const {
    const DI w = DI::pt(t.p2[n.N]);
    const DI& s = t.ts[n.N];
    const DI Cw = times_pow2(n.C, t.p2[n.N]);
    const DI L0 = n.Fa + Cw * n.u0, L1 = n.Fa + Cw * n.u1;
    const DI Flo = imin(L0, L1);
    DI Fhi = imax(L0, L1) + s * t.fmax;
    const bool full = n.full();

    auto settle = [&](DI v) {
      n.lo = v.lo;
      n.hi = v.hi;
      n.gap = 0;
      return true;
    };
    if (Fhi.hi <= yb.lo) return settle({});
    if (yt.hi <= Flo.lo) return settle(w * (n.u1 - n.u0) * (yt - yb));
    if (full) {
      if (yb.hi <= Flo.lo && Fhi.hi <= yt.lo) return settle(in_band(n, w, Cw, s));
      Fhi = n.Fa + s * t.max_value(n.C / t.tl[n.N]);
      if (Fhi.hi <= yb.lo) return settle({});
      if (yb.hi <= Flo.lo && Fhi.hi <= yt.lo) return settle(in_band(n, w, Cw, s));
    }
    const DI lift = s * t.ts[1] * t.fmax;
    double lo = (w * clip_tent(n, n.u0.hi, n.u1.lo, Cw, s, DI{}, false)).lo;
    double hi = (w * clip_tent(n, n.u0.lo, n.u1.hi, Cw, s, lift, true)).hi;
    const DI cov_hi = DI::pt(n.u1.hi) - DI::pt(n.u0.lo);
    const DI cov_lo = imax(DI::pt(n.u1.lo) - DI::pt(n.u0.hi), DI{});
    hi = std::min(hi, (w * cov_hi * clamp0(DI::pt(Fhi.hi) - DI::pt(yb.lo), DI::pt(yt.hi) - DI::pt(yb.lo))).hi);
    lo = std::max(lo, (w * cov_lo * clamp0(DI::pt(Flo.lo) - DI::pt(yb.hi), DI::pt(yt.lo) - DI::pt(yb.hi))).lo);
    lo = std::max(lo, 0.0);
    n.lo = lo;
    n.hi = std::max(hi, lo);
    n.gap = up(n.hi - n.lo);
    return false;
  }

  std::pair<Node, Node> split(const Node& n) const {
    const DI& tlN = t.tl[n.N];
    const DI& s = t.ts[n.N];
    Node left{n.Fa, n.C + tlN, {}, {}, n.N + 1};
    Node right{n.Fa + times_pow2(times_pow2(n.C, t.p2[n.N]) + s, 0.5), n.C - tlN, {}, {}, n.N + 1};
    if (n.full()) {
      left.u0 = right.u0 = DI{};
      left.u1 = right.u1 = DI::pt(1);
      return {left, right};
    }
    // Doubling is exact; 2u - 1 is exact for u in [1/2, 1].
    left.u0 = {std::min(2 * n.u0.lo, 1.0), std::min(2 * n.u0.hi, 1.0)};
    left.u1 = {std::min(2 * n.u1.lo, 1.0), std::min(2 * n.u1.hi, 1.0)};
    right.u0 = {std::max(2 * n.u0.lo - 1, 0.0), std::max(2 * n.u0.hi - 1, 0.0)};
    right.u1 = {std::max(2 * n.u1.lo - 1, 0.0), std::max(2 * n.u1.hi - 1, 0.0)};
    return {left, right};
  }

 private:
  DI in_band(const Node& n, DI w, DI Cw, DI s) const { return w * (n.Fa - yb + times_pow2(Cw, 0.5) + s * t.mean); }

  double lam(double u) const { return u <= 0.5 ? u : 1 - u; }  // exact for u in [1/2, 1]

  // Integral over [p, q] of clamp(Fa + Cw u + s Lambda(u) + lift, yb, yt) - yb,
  // with the lower or upper ends of the uncertain data.
  DI clip_tent(const Node& n, double p, double q, DI Cw, DI s, DI lift, bool upper) const {
    p = std::clamp(p, 0.0, 1.0);
    q = std::clamp(q, 0.0, 1.0);
    auto v = [&](double u) {
      const DI val = n.Fa + Cw * DI::pt(u) + s * DI::pt(lam(u)) + lift;
      return upper ? val.hi : val.lo;
    };
    // Less of the band counts as Omega when its bottom is higher.
    const double lo = upper ? yb.lo : yb.hi, hi = upper ? yt.hi : yt.lo;
    DI total{};
    if (p < 0.5) {
      const double e = q < 0.5 ? q : 0.5;
      total = total + clip_linear(p, e, v(p), v(e), lo, hi);
    }
    if (0.5 < q) {
      const double b = 0.5 < p ? p : 0.5;
      total = total + clip_linear(b, q, v(b), v(q), lo, hi);
    }
    return total;
  }

  const Tables& t;
  DI yb, yt;
};


DI interval_of(const Rational& q) { return DI::of(RealBound::from_rational(q, 64)); }

}  // namespace

RefineResult refine_double(const RefineJob& job) {
  const KnoppTables& T = *job.tables;
  const mpfr_prec_t prec = std::max<mpfr_prec_t>(T.precision(), 256);
  const Tables t(T, job.cap);
  const Refiner refiner(t, interval_of(job.yb), interval_of(job.yt));
  RefineResult out;

  // Level-n0 cover, evaluated once.
  std::vector<Node> roots;
  std::vector<Node> settled_roots;
  {
    const Rational scale(Integer(1) << job.n0);
    Integer K0, K1;
    const Rational lo = job.c * scale, hi = job.d * scale;
    mpz_fdiv_q(K0.get_mpz_t(), lo.get_num_mpz_t(), lo.get_den_mpz_t());
    mpz_cdiv_q(K1.get_mpz_t(), hi.get_num_mpz_t(), hi.get_den_mpz_t());
    for (Integer K = K0; K < K1; ++K) {
      Node n{DI::of(T.dyadic_value(K, job.n0)), DI::of(T.dyadic_slope(K, job.n0)), {}, {},
             static_cast<unsigned>(job.n0)};
      Rational u0 = job.c * scale - K, u1 = job.d * scale - K;
      u0.canonicalize();
      u1.canonicalize();
      n.u0 = u0 <= 0 ? DI{} : interval_of(u0);
      n.u1 = u1 >= 1 ? DI::pt(1) : interval_of(u1);
      if (!(n.u0.lo < n.u1.hi)) continue;
      (refiner.evaluate(n) ? settled_roots : roots).push_back(n);
    }
  }
  out.leaves = roots.size() + settled_roots.size();
  out.depth = job.n0;

  Acc settled_lo(prec, MPFR_RNDD), settled_hi(prec, MPFR_RNDU);
  Acc open_lo(prec, MPFR_RNDD), open_hi(prec, MPFR_RNDU);
  mpfr_t lo, hi, gap;
  mpfr_inits2(prec, lo, hi, gap, static_cast<mpfr_ptr>(nullptr));

  // Splitting every leaf whose gap exceeds g is what greedy refinement by
  // largest gap does before its largest gap drops below g; depth first it
  // needs no queue. Passes shrink g until the total gap meets the target, and
  // the last complete pass is the result.
  double g = HUGE_VAL;
  double prev_g = 0, prev_total = 0;
  std::vector<Node> stack;
  bool have_result = false;
  Real best_lo(prec), best_hi(prec);
  while (true) {
    settled_lo.reset();
    settled_hi.reset();
    open_lo.reset();
    open_hi.reset();
    for (const Node& n : settled_roots) {
      settled_lo.add(n.lo);
      settled_hi.add(n.hi);
    }
    bool budget_hit = false, cap_hit = false, noisy = false;
    stack.assign(roots.begin(), roots.end());
    while (!stack.empty() && !budget_hit) {
      const Node n = stack.back();
      stack.pop_back();
      if (n.gap <= g) {
        open_lo.add(n.lo);
        open_hi.add(n.hi);
        continue;
      }
      const double noise = (n.Fa.hi - n.Fa.lo + t.ts[n.N].hi - t.ts[n.N].lo) * t.p2[n.N];
      if (n.N >= job.cap || n.gap <= 16 * noise) {
        cap_hit = cap_hit || n.N >= job.cap;
        noisy = noisy || n.gap <= 16 * noise;
        open_lo.add(n.lo);
        open_hi.add(n.hi);
        continue;
      }
      auto [left, right] = refiner.split(n);
      for (Node* c : {&right, &left}) {
        if (!(c->u0.lo < c->u1.hi)) continue;
        ++out.leaves;
        out.depth = std::max<std::size_t>(out.depth, c->N);
        if (refiner.evaluate(*c)) {
          settled_lo.add(c->lo);
          settled_hi.add(c->hi);
        } else {
          stack.push_back(*c);
        }
      }
      budget_hit = out.leaves >= job.leaf_budget;
    }
    if (budget_hit) break;

    mpfr_add(best_lo.get(), settled_lo.get(), open_lo.get(), MPFR_RNDD);
    mpfr_add(best_hi.get(), settled_hi.get(), open_hi.get(), MPFR_RNDU);
    have_result = true;
    mpfr_sub(gap, best_hi.get(), best_lo.get(), MPFR_RNDU);
    const double total = mpfr_get_d(gap, MPFR_RNDU);
    const double target =
        job.rel_tol * job.scale(best_lo, best_hi);
    if (total <= target) {
      out.converged = true;
      break;
    }
    // Settled leaves keep their rounding width however deep the refinement goes.
    mpfr_sub(gap, settled_hi.get(), settled_lo.get(), MPFR_RNDU);
    if (noisy || mpfr_get_d(gap, MPFR_RNDU) > target / 2) {
      out.precision_limited = true;
      break;
    }
    if (cap_hit) break;
    // total ~ g^beta; beta from the last two passes once there are two.
    double next;
    if (g == HUGE_VAL) {
      // A side whose lower bound is still 0 has no scale yet.
      next = target > 0 ? target / 4 : total / 64;
    } else {
      double beta = 0.5;
      if (prev_g > 0 && prev_total > total) beta = std::clamp(std::log(prev_total / total) / std::log(prev_g / g), 0.2, 1.5);
      next = g * std::clamp(std::pow(0.8 * target / total, 1 / beta), 1.0 / 64, 0.5);
    }
    prev_g = g == HUGE_VAL ? 0 : g;
    prev_total = total;
    g = next;
  }

  if (!have_result) {
    // Not even the coarsest pass finished: bound by the root brackets.
    settled_lo.reset();
    settled_hi.reset();
    for (const auto* v : {&settled_roots, &roots})
      for (const Node& n : *v) {
        settled_lo.add(n.lo);
        settled_hi.add(n.hi);
      }
    mpfr_set(best_lo.get(), settled_lo.get(), MPFR_RNDD);
    mpfr_set(best_hi.get(), settled_hi.get(), MPFR_RNDU);
  }
  mpfr_set(lo, best_lo.get(), MPFR_RNDD);
  mpfr_set(hi, best_hi.get(), MPFR_RNDU);
  Real rl(prec), rh(prec);
  mpfr_set(rl.get(), lo, MPFR_RNDD);
  mpfr_set(rh.get(), hi, MPFR_RNDU);
  mpfr_clears(lo, hi, gap, static_cast<mpfr_ptr>(nullptr));
  out.lo = RealBound(rl, rl);
  out.hi = RealBound(rh, rh);
  return out;
}

}  // namespace knopp::detail
