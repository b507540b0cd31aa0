#include "knopp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <queue>

#include "knopp/error.hpp"
#include "knopp/extrema.hpp"
#include "box_refine.hpp"

namespace knopp {

std::string to_string(Side s) { return s == Side::Omega ? "omega" : "omega_c"; }

std::string to_string(MeasureFlag f) { return f == MeasureFlag::Ok ? "ok" : "tolerance_unreachable"; }

namespace {

Rational reduced(Rational q) {
  q.canonicalize();
  return q;
}

Rational pow2(long e) {
  return e >= 0 ? Rational(Integer(1) << e) : reduced(Rational(1, Integer(1) << -e));
}

RealBound lower_point(const RealBound& b) { return RealBound(b.lower(), b.lower()); }
RealBound upper_point(const RealBound& b) { return RealBound(b.upper(), b.upper()); }

Rational exact_of(const Real& v) {
  Rational q;
  mpfr_get_q(q.get_mpq_t(), v.get());
  return q;
}

Rational midpoint_of(const RealBound& b) { return reduced((exact_of(b.lower()) + exact_of(b.upper())) / 2); }

double half_width_up(const RealBound& b) {
  RealBound h = b - RealBound(b.lower(), b.lower());
  return h.upper_d() / 2 * (1 + 1e-15) + std::numeric_limits<double>::denorm_min();
}

// Integral over u in [p, q] of clamp(v, lo, hi) - lo for v linear from vp to vq.
// All arguments are exact points, so every branch is decided exactly.
RealBound clip_linear(const RealBound& p, const RealBound& q, const RealBound& vp, const RealBound& vq,
                      const RealBound& lo, const RealBound& hi) {
  const mpfr_prec_t prec = p.precision();
  if (!p.certainly_less(q)) return RealBound(prec);
  const RealBound len = q - p;
  const bool ordered = !vq.certainly_less(vp);
  const RealBound& a = ordered ? vp : vq;
  const RealBound& b = ordered ? vq : vp;
  if (b.certainly_less_equal(lo)) return RealBound(prec);
  if (hi.certainly_less_equal(a)) return len * (hi - lo);
  if (!a.certainly_less(b)) return len * (a - lo);  // lo < a = b < hi
  const RealBound z1 = lo.certainly_less(a) ? a : lo;
  const RealBound z2 = b.certainly_less(hi) ? b : hi;
  const RealBound span = b - a;
  RealBound mean = (z2 - z1) / span * ((z1 + z2).scaled(-1) - lo);
  if (hi.certainly_less(b)) mean += (b - (a.certainly_less(hi) ? hi : a)) / span * (hi - lo);
  return len * mean;
}

struct Node {
  RealBound Fa;  // F at the left end
  RealBound C;   // slope C_{N-1} on the interval
  Rational u0, u1;  // covered part, in local coordinates
  std::size_t N;
  RealBound lo, hi;  // bracket of the contribution
  double gap;
  bool full() const { return u0 == 0 && u1 == 1; }
};

struct ByGap {
  bool operator()(const Node* a, const Node* b) const { return a->gap < b->gap; }
};

class Refiner {
 public:
  Refiner(const KnoppTables& tables, const RealBound& yb, const RealBound& yt)
      : T(tables), prec(tables.precision()), yb(yb), yt(yt), zero(prec), one(1.0, prec), half(0.5, prec) {}

  // Returns true when the contribution is settled; `node.lo` / `node.hi` hold it either way.
  bool evaluate(Node& n) const {
    const RealBound w = one.scaled(-static_cast<long>(n.N));
    const RealBound& s = T.scale_pow(n.N);
    const RealBound Cw = n.C * w;
    const RealBound u0 = RealBound::from_rational(n.u0, prec);
    const RealBound u1 = RealBound::from_rational(n.u1, prec);
    const RealBound L0 = n.Fa + Cw * u0;
    const RealBound L1 = n.Fa + Cw * u1;
    const RealBound Flo = min(L0, L1);
    RealBound Fhi = max(L0, L1) + s * T.global_max();
    const bool full = n.full();

    auto settle = [&](const RealBound& v) {
      n.lo = v;
      n.hi = v;
      n.gap = 0;
      return true;
    };
    if (Fhi.certainly_less_equal(yb)) return settle(zero);
    if (yt.certainly_less_equal(Flo)) return settle(w * (u1 - u0) * (yt - yb));
    if (full) {
      if (yb.certainly_less_equal(Flo) && Fhi.certainly_less_equal(yt)) return settle(in_band(n, w, Cw, s));
      Fhi = n.Fa + s * T.max_value(n.C / T.slope_pow(n.N));
      if (Fhi.certainly_less_equal(yb)) return settle(zero);
      if (yb.certainly_less_equal(Flo) && Fhi.certainly_less_equal(yt)) return settle(in_band(n, w, Cw, s));
    }
    // G(u) = F(u) lies in [Lambda(u), Lambda(u) + t Fmax].
    const RealBound lift = s * T.scale_pow(1) * T.global_max();
    RealBound lo = w * clip_tent(n, u0.upper(), u1.lower(), Cw, s, zero, false);
    RealBound hi = w * clip_tent(n, u0.lower(), u1.upper(), Cw, s, lift, true);
    // Constant bounds from Flo / Fhi on the covered length.
    const RealBound band = yt - yb;
    const RealBound cov = u1 - u0;
    hi = min(hi, w * cov * clamp(Fhi - yb, zero, band));
    lo = max(lo, w * cov * clamp(Flo - yb, zero, band));
    n.lo = lower_point(lo);
    n.hi = upper_point(max(hi, lo));
    n.gap = (n.hi - n.lo).upper_d();
    return n.gap == 0;
  }

  std::pair<Node, Node> split(const Node& n) const {
    const RealBound& tlN = T.slope_pow(n.N);
    const RealBound& s = T.scale_pow(n.N);
    Node left{n.Fa, n.C + tlN, 0, 0, n.N + 1, zero, zero, 0};
    Node right{n.Fa + (n.C.scaled(-static_cast<long>(n.N)) + s).scaled(-1), n.C - tlN, 0, 0, n.N + 1, zero, zero, 0};
    const Rational h(1, 2);
    left.u0 = reduced(2 * n.u0);
    left.u1 = n.u1 < h ? reduced(2 * n.u1) : Rational(1);
    right.u0 = n.u0 > h ? reduced(2 * n.u0 - 1) : Rational(0);
    right.u1 = reduced(2 * n.u1 - 1);
    return {std::move(left), std::move(right)};
  }

 private:
  RealBound in_band(const Node& n, const RealBound& w, const RealBound& Cw, const RealBound& s) const {
    return w * (n.Fa - yb + Cw.scaled(-1) + s * T.mean());
  }

  // Integral over [p, q] of clamp(Fa + Cw u + s Lambda(u) + lift, yb, yt) - yb, using
  // lower or upper endpoints of the uncertain data.
  RealBound clip_tent(const Node& n, const Real& p_raw, const Real& q_raw, const RealBound& Cw, const RealBound& s,
                      const RealBound& lift, bool upper) const {
    const RealBound p = clamp(RealBound(p_raw, p_raw), zero, one);
    const RealBound q = clamp(RealBound(q_raw, q_raw), zero, one);
    auto v = [&](const RealBound& u) {
      const RealBound lam = u.certainly_less_equal(half) ? u : one - u;
      const RealBound val = n.Fa + Cw * u + s * lam + lift;
      return upper ? upper_point(val) : lower_point(val);
    };
    RealBound total(prec);
    if (p.certainly_less(half)) {
      const RealBound e = q.certainly_less(half) ? q : half;
      total += clip_linear(p, e, v(p), v(e), yb, yt);
    }
    if (half.certainly_less(q)) {
      const RealBound b = half.certainly_less(p) ? p : half;
      total += clip_linear(b, q, v(b), v(q), yb, yt);
    }
    return upper ? upper_point(total) : lower_point(total);
  }

  const KnoppTables& T;
  mpfr_prec_t prec;
  RealBound yb, yt;
  RealBound zero, one, half;
};

// The double path keeps 2^-cap and its products clear of subnormals.
constexpr std::size_t kDoubleDepthLimit = 400;
// Open intervals of the extended-precision path stay in memory.
constexpr std::size_t kMpfrLeafBudget = 4'000'000;

std::size_t ceil_log2_inverse(const Rational& r) {
  // smallest k >= 0 with 2^-k <= r
  if (r <= 0) throw OutOfDomain("radius must be positive");
  std::size_t k = 0;
  while (pow2(-static_cast<long>(k)) > r) ++k;
  return k;
}

}  // namespace

namespace detail {

RefineResult refine_mpfr(const RefineJob& job) {
  const KnoppTables& T = *job.tables;
  const mpfr_prec_t prec = T.precision();
  Refiner refiner(T, RealBound::from_rational(job.yb, prec), RealBound::from_rational(job.yt, prec));
  std::priority_queue<Node*, std::vector<Node*>, ByGap> heap;
  std::vector<std::unique_ptr<Node>> store;
  RealBound settled_lo(prec), settled_hi(prec);
  RealBound open_lo(prec), open_hi(prec);
  RefineResult out;

  auto admit = [&](Node&& n) {
    ++out.leaves;
    out.depth = std::max(out.depth, n.N);
    if (refiner.evaluate(n)) {
      settled_lo += n.lo;
      settled_hi += n.hi;
      return;
    }
    open_lo += n.lo;
    open_hi += n.hi;
    store.push_back(std::make_unique<Node>(std::move(n)));
    heap.push(store.back().get());
  };

  const Rational scale = pow2(static_cast<long>(job.n0));
  Integer K0, K1;
  {
    const Rational lo = job.c * scale, hi = job.d * scale;
    mpz_fdiv_q(K0.get_mpz_t(), lo.get_num_mpz_t(), lo.get_den_mpz_t());
    mpz_cdiv_q(K1.get_mpz_t(), hi.get_num_mpz_t(), hi.get_den_mpz_t());
  }
  for (Integer K = K0; K < K1; ++K) {
    Node n{T.dyadic_value(K, job.n0), T.dyadic_slope(K, job.n0), 0, 1, job.n0, RealBound(prec), RealBound(prec), 0};
    n.u0 = std::max(Rational(0), reduced(job.c * scale - K));
    n.u1 = std::min(Rational(1), reduced(job.d * scale - K));
    if (n.u0 < n.u1) admit(std::move(n));
  }

  out.converged = true;
  while (!heap.empty()) {
    const RealBound lo = settled_lo + open_lo, hi = settled_hi + open_hi;
    if ((hi - lo).mid_d() <= job.rel_tol * job.scale(lo.lower(), hi.upper())) break;
    Node* top = heap.top();
    if (top->N >= job.cap || out.leaves >= std::min(job.leaf_budget, kMpfrLeafBudget)) {
      out.converged = false;
      break;
    }
    heap.pop();
    open_lo -= top->lo;
    open_hi -= top->hi;
    auto [left, right] = refiner.split(*top);
    if (left.u0 < left.u1) admit(std::move(left));
    if (right.u0 < right.u1) admit(std::move(right));
  }

  out.lo = settled_lo;
  out.hi = settled_hi;
  while (!heap.empty()) {
    out.lo += heap.top()->lo;
    out.hi += heap.top()->hi;
    heap.pop();
  }
  out.lo = lower_point(out.lo);
  out.hi = upper_point(out.hi);
  return out;
}

}  // namespace detail

// -- probe ------------------------------------------------------------------------

BoxProbe::BoxProbe(const ProbePoint& x0, const Alpha& alpha, std::size_t k_max, double rel_tol)
    : alpha_(alpha), k_max_(k_max), rel_tol_(rel_tol) {
  if (!(rel_tol > 0 && rel_tol < 0.5)) throw OutOfDomain("rel_tol must lie in (0, 0.5)");
  const double a = alpha.value();
  const std::size_t cap = n_cap(k_max);
  std::size_t D = 0;
  if (!x0.x.is_exact()) {
    // The nominal centre moves by 2^-D horizontally and by about 2^(-alpha D)
    // vertically; both must stay far below rel_tol r^(1 + 1/alpha).
    const double need = k_max / a + std::log2(1 / rel_tol) + 16;
    D = static_cast<std::size_t>(std::ceil(need / a));
    if (auto depth = x0.x.depth(); depth && D > *depth) D = *depth;
  }
  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(std::max<std::size_t>({128, cap + 64, D + 64}));
  tables_.emplace(alpha, prec, std::max(cap, D) + 2);
  if (x0.x.is_exact()) {
    x0_ = *x0.x.exact_value();
    dx_ = 0;
    const RealBound y = x0.y ? x0.y->with_precision(prec) : eval_F_exact(x0.x, *tables_);
    y0_ = midpoint_of(y);
    dy_ = half_width_up(y);
  } else {
    x0_ = reduced(Rational(2 * x0.x.prefix(D) + 1, Integer(1) << (D + 1)));
    dx_ = std::ldexp(1.0, -static_cast<int>(D) - 1);
    const RealBound y = x0.y ? x0.y->with_precision(prec) : enclosure_at_depth(x0.x, D, *tables_);
    y0_ = midpoint_of(y);
    dy_ = half_width_up(y);
  }
}

std::size_t BoxProbe::n_cap(std::size_t k) const {
  // Features of width r^(1/alpha) set the measure; resolving them to rel_tol
  // takes a further log2(1 / rel_tol) / (2 alpha) levels or so.
  const auto extra = static_cast<std::size_t>(std::ceil(std::log2(1 / rel_tol_) / (2 * alpha_.value())));
  return std::max<std::size_t>(40, static_cast<std::size_t>(std::ceil(k / alpha_.value())) + 10 + extra);
}

BoxMeasure BoxProbe::measure_k(std::size_t k, Target target, const MeasureOptions& opts) const {
  return measure(pow2(-static_cast<long>(k)), target, opts);
}

BoxMeasure BoxProbe::measure(const Rational& r, Target target, const MeasureOptions& opts) const {
  if (r <= 0) throw OutOfDomain("radius must be positive");
  const KnoppTables& T = *tables_;
  const mpfr_prec_t prec = T.precision();
  const std::size_t k = ceil_log2_inverse(r);
  if (k > k_max_) throw DepthExceeded(k, k_max_);
  const std::size_t cap = std::min(opts.n_cap ? opts.n_cap : n_cap(k), T.n_max() - 1);
  const double r_d = r.get_d();

  const Rational c = std::max(Rational(0), reduced(x0_ - r));
  const Rational d = std::min(Rational(1), reduced(x0_ + r));
  const Rational yb_q = std::max(Rational(0), reduced(y0_ - r));
  const Rational yt_q = reduced(y0_ + r);
  const RealBound area = RealBound::from_rational(reduced((d - c) * 2 * r), prec);

  BoxMeasure out;
  for (MeasureBound* m : {&out.omega, &out.complement}) {
    m->r = r_d;
    m->area = area.upper_d();
  }
  if (c >= d) return out;

  const RealBound yb = RealBound::from_rational(yb_q, prec);
  const RealBound yt = RealBound::from_rational(yt_q, prec);
  // Symmetric difference between the nominal and the true box.
  const double slack = 2 * (2 * r_d) * dx_ + 2 * Rational(d - c).get_d() * dy_;

  detail::RefineJob job{&T, c, d, yb_q, yt_q, k, cap, opts.rel_tol, opts.leaf_budget, {}};
  // Sides thinner than r^4 are resolved to rel_tol * r^4 in absolute terms,
  // but never to a gap above half their size.
  const double floor_scale = std::pow(r_d, 4.0);
  const double area_d = area.mid_d();
  const RealBound area_mid = area.midpoint();
  job.scale = [&](const Real& lo, const Real& hi) {
    // The complement is a difference of nearly equal numbers; subtract before rounding.
    const auto complement = [&] {
      Real diff(prec);
      mpfr_sub(diff.get(), area_mid.lower().get(), hi.get(), MPFR_RNDN);
      return diff.to_double();
    };
    double s = 0;
    switch (target) {
      case Target::Omega: s = lo.to_double(); break;
      case Target::OmegaComplement: s = complement(); break;
      case Target::Smaller: s = std::min(lo.to_double(), complement()); break;
      case Target::Area: s = area_d; break;
    }
    s = std::max(s, 0.0);
    return std::min(std::max(s, floor_scale), s / (2 * opts.rel_tol));
  };

  detail::RefineResult res;
  bool have = false;
  if (cap <= kDoubleDepthLimit) {
    res = detail::refine_double(job);
    have = !res.precision_limited;
  }
  if (!have) res = detail::refine_mpfr(job);
  const MeasureFlag flag = res.converged ? MeasureFlag::Ok : MeasureFlag::ToleranceUnreachable;
  const std::size_t leaves = res.leaves, depth = res.depth;
  const RealBound& lo_sum = res.lo;
  const RealBound& hi_sum = res.hi;

  const RealBound zero(prec);
  const RealBound slack_b = RealBound::between(0, slack, prec);
  RealBound om_lo = clamp(lower_point(lo_sum) - upper_point(slack_b), zero, area);
  RealBound om_hi = clamp(upper_point(hi_sum) + upper_point(slack_b), zero, area);

  const double scale_final = job.scale(om_lo.lower(), om_hi.upper());
  MeasureFlag final_flag = flag;
  if (2 * slack > opts.rel_tol * scale_final) final_flag = MeasureFlag::ToleranceUnreachable;

  out.omega.lower = om_lo.lower_d();
  out.omega.upper = om_hi.upper_d();
  const RealBound c_lo = area - om_hi, c_hi = area - om_lo;
  out.complement.lower = std::max(0.0, c_lo.lower_d());
  out.complement.upper = c_hi.upper_d();
  for (MeasureBound* m : {&out.omega, &out.complement}) {
    m->flag = final_flag;
    m->depth = depth;
    m->leaves = leaves;
  }
  return out;
}

MeasureBound measure_in_box(const ProbePoint& x0, const Rational& r, Side side, const Alpha& alpha, double rel_tol) {
  const BoxProbe probe(x0, alpha, ceil_log2_inverse(r), rel_tol);
  MeasureOptions opts;
  opts.rel_tol = rel_tol;
  const Target target = side == Side::Omega ? Target::Omega : Target::OmegaComplement;
  return probe.measure(r, target, opts).side(side);
}

// -- traces -----------------------------------------------------------------------

std::pair<double, double> log_ratio(double meas_lo, double meas_hi, double r) {
  const double lr = std::log(r);
  const double inf = std::numeric_limits<double>::infinity();
  const double lo = meas_hi > 0 ? std::log(meas_hi) / lr - 2 : inf;
  const double hi = meas_lo > 0 ? std::log(meas_lo) / lr - 2 : inf;
  return {std::nextafter(lo, -inf), std::nextafter(hi, inf)};
}

void summarize(ExponentTrace& trace) {
  const std::size_t span = trace.k_max > trace.k_min ? trace.k_max - trace.k_min : 1;
  const std::size_t n = trace.entries.size();
  // Sparse subsequences have fewer entries than the k-span suggests.
  trace.window = std::min(std::max<std::size_t>(1, (span + 2) / 3), std::max<std::size_t>(n, 1));
  trace.weak = Summary{};
  trace.strong = Summary{};
  const std::size_t first = n > trace.window ? n - trace.window : 0;
  for (std::size_t i = first; i < n; ++i) {
    const TraceEntry& e = trace.entries[i];
    if (e.flagged()) continue;
    if (!trace.weak.valid) {
      trace.weak = {e.ratio_hi, e.ratio_lo, e.ratio_hi, true};
      trace.strong = {e.ratio_lo, e.ratio_lo, e.ratio_hi, true};
      continue;
    }
    trace.weak.lo = std::min(trace.weak.lo, e.ratio_lo);
    trace.weak.hi = std::min(trace.weak.hi, e.ratio_hi);
    trace.weak.est = trace.weak.hi;
    trace.strong.lo = std::max(trace.strong.lo, e.ratio_lo);
    trace.strong.hi = std::max(trace.strong.hi, e.ratio_hi);
    trace.strong.est = trace.strong.lo;
  }
}

namespace {

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

Summary regression_exponent(const ExponentTrace& trace) {
  std::vector<double> lr, lo, hi, mid;
  const std::size_t n = trace.entries.size();
  const std::size_t window = std::max<std::size_t>(trace.window, 2);
  for (std::size_t i = n > window ? n - window : 0; i < n; ++i) {
    const TraceEntry& e = trace.entries[i];
    if (e.flagged() || !(e.measure.lower > 0)) continue;
    lr.push_back(std::log(e.r));
    lo.push_back(std::log(e.measure.lower));
    hi.push_back(std::log(e.measure.upper));
    mid.push_back((lo.back() + hi.back()) / 2);
  }
  if (lr.size() < 2) return {};
  const double a = fit_slope(lr, lo) - 2, b = fit_slope(lr, hi) - 2;
  return {fit_slope(lr, mid) - 2, std::min(a, b), std::max(a, b), true};
}

std::vector<std::size_t> strong_scales(const DigitStream& x, Side side, const Alpha& alpha, std::size_t k_limit) {
  const RuleSchedule sched = x.schedule().value_or(RuleSchedule{});
  const auto& pairs = side == Side::OmegaComplement ? sched.dyadic : sched.maxima;
  std::vector<std::size_t> ks;
  for (const ScalePair& p : pairs) {
    const auto k = static_cast<std::size_t>(std::floor(alpha.value() * static_cast<double>(p.end)));
    if (k < 2 || k - 1 <= p.start) continue;
    if (k - 1 > k_limit) break;
    ks.push_back(k - 1);
  }
  return ks;
}

namespace {

TraceEntry entry_for(std::size_t k, const MeasureBound& m) {
  const auto [lo, hi] = log_ratio(m.lower, m.upper, m.r);
  return TraceEntry{k, m.r, m, lo, hi};
}

ExponentTrace traced(const ProbePoint& x0, const Alpha& alpha, const std::vector<std::size_t>& scales,
                     double rel_tol, Side side, bool dense) {
  if (scales.empty()) throw OutOfDomain("no radii");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (scales[i] <= scales[i - 1]) throw OutOfDomain("radii must be strictly decreasing");
  const BoxProbe probe(x0, alpha, scales.back(), rel_tol);
  MeasureOptions opts;
  opts.rel_tol = rel_tol;
  const Target target = side == Side::Omega ? Target::Omega : Target::OmegaComplement;
  ExponentTrace t{side, {}, {}, {}, 0, scales.front(), scales.back(), rel_tol};
  for (std::size_t k : scales) t.entries.push_back(entry_for(k, probe.measure_k(k, target, opts).side(side)));
  if (!dense) t.k_min = scales.front();
  summarize(t);
  return t;
}

std::vector<std::size_t> range(std::size_t k_min, std::size_t k_max) {
  if (k_min > k_max) throw OutOfDomain("k_min exceeds k_max");
  std::vector<std::size_t> ks;
  for (std::size_t k = k_min; k <= k_max; ++k) ks.push_back(k);
  return ks;
}

}  // namespace

ExponentTrace exponent_trace(const ProbePoint& x0, Side side, const Alpha& alpha, std::size_t k_min,
                             std::size_t k_max, double rel_tol) {
  return traced(x0, alpha, range(k_min, k_max), rel_tol, side, true);
}

std::pair<ExponentTrace, ExponentTrace> exponent_traces(const ProbePoint& x0, const Alpha& alpha, std::size_t k_min,
                                                        std::size_t k_max, double rel_tol) {
  const auto ks = range(k_min, k_max);
  const BoxProbe probe(x0, alpha, k_max, rel_tol);
  MeasureOptions opts;
  opts.rel_tol = rel_tol;
  ExponentTrace om{Side::Omega, {}, {}, {}, 0, k_min, k_max, rel_tol};
  ExponentTrace co{Side::OmegaComplement, {}, {}, {}, 0, k_min, k_max, rel_tol};
  for (std::size_t k : ks) {
    const BoxMeasure m = probe.measure_k(k, Target::Smaller, opts);
    om.entries.push_back(entry_for(k, m.omega));
    co.entries.push_back(entry_for(k, m.complement));
  }
  summarize(om);
  summarize(co);
  return {std::move(om), std::move(co)};
}

ExponentTrace exponent_trace_on_subsequence(const ProbePoint& x0, Side side, const Alpha& alpha,
                                            const std::vector<std::size_t>& scales, double rel_tol) {
  return traced(x0, alpha, scales, rel_tol, side, false);
}

// -- p-exponents ------------------------------------------------------------------

double optimal_p_mean(double m, double p) {
  if (!(p >= 1)) throw OutOfDomain("p must be at least 1");
  m = std::clamp(m, 0.0, 1.0);
  if (m == 0 || m == 1) return 0;
  if (p == 1) return std::min(m, 1 - m);
  // d/dc = 0 at (c / (1 - c))^(p-1) = m / (1 - m)
  const double ratio = std::pow(m / (1 - m), 1 / (p - 1));
  const double c = ratio / (1 + ratio);
  const double v = std::pow(c, p) * (1 - m) + std::pow(1 - c, p) * m;
  return std::pow(v, 1 / p);
}

PExponent p_exponent_direct(const ProbePoint& x0, double p, const Alpha& alpha, std::size_t k_min, std::size_t k_max,
                            double rel_tol) {
  if (!(p >= 1) || !std::isfinite(p)) throw OutOfDomain("p must be finite and at least 1");
  const auto ks = range(k_min, k_max);
  const BoxProbe probe(x0, alpha, k_max, rel_tol);
  MeasureOptions opts;
  opts.rel_tol = rel_tol;
  PExponent out{p, {}, {}, 0};
  for (std::size_t k : ks) {
    const BoxMeasure m = probe.measure_k(k, Target::Smaller, opts);
    const double area = m.omega.area;
    const double f_lo = m.omega.lower / area, f_hi = m.omega.upper / area;
    // The p-mean increases with min(m, 1 - m).
    const double small_lo = std::min(f_lo, 1 - f_hi), small_hi = std::min(f_hi, 1 - f_lo);
    out.entries.push_back({k, f_lo, f_hi, optimal_p_mean(small_lo, p), optimal_p_mean(small_hi, p), m.omega.flag});
  }
  // Window estimate in the style of the weak exponent: min over the window of
  // log(value) / log(rho), bracketed by the value bracket.
  const std::size_t span = k_max > k_min ? k_max - k_min : 1;
  out.window = std::max<std::size_t>(1, (span + 2) / 3);
  const std::size_t n = out.entries.size();
  const double inf = std::numeric_limits<double>::infinity();
  Summary s{inf, inf, inf, false};
  for (std::size_t i = n > out.window ? n - out.window : 0; i < n; ++i) {
    const PEntry& e = out.entries[i];
    if (e.flag != MeasureFlag::Ok) continue;
    const double lr = -static_cast<double>(e.k) * std::log(2.0);
    const double u_lo = e.value_hi > 0 ? std::log(e.value_hi) / lr : inf;
    const double u_hi = e.value_lo > 0 ? std::log(e.value_lo) / lr : inf;
    s.lo = std::min(s.lo, u_lo);
    s.hi = std::min(s.hi, u_hi);
    s.valid = true;
  }
  if (!s.valid) s = Summary{};
  s.est = s.hi;
  out.u = s;
  return out;
}

// -- box dimension ----------------------------------------------------------------

namespace {

struct Cell {
  RealBound Fa, C;
};

double fit_slope(const std::vector<std::size_t>& ks, const std::vector<double>& ys) {
  return fit_slope(std::vector<double>(ks.begin(), ks.end()), ys);
}

}  // namespace

BoxDimension box_dimension(const Alpha& alpha, std::size_t k_min, std::size_t k_max) {
  if (k_min >= k_max) throw OutOfDomain("box dimension needs k_min < k_max");
  if (k_max > 24) throw OutOfDomain("box dimension limited to k <= 24");
  const mpfr_prec_t prec = kDefaultPrecision;
  const KnoppTables T(alpha, prec, k_max + 2);
  const RealBound one(1.0, prec);
  BoxDimension out;
  std::vector<Cell> level{{RealBound(prec), RealBound(prec)}};
  for (std::size_t N = 0; N <= k_max; ++N) {
    if (N >= k_min) {
      const RealBound& s = T.scale_pow(N);
      const double delta = std::ldexp(1.0, -static_cast<int>(N));
      double lo = 0, hi = 0;
      for (const Cell& c : level) {
        const RealBound Fb = c.Fa + c.C.scaled(-static_cast<long>(N));
        const RealBound mn = min(c.Fa, Fb);
        const RealBound mx = c.Fa + s * T.max_value(c.C / T.slope_pow(N));
        // Boxes of side delta in this column that meet the graph.
        lo += std::floor(mx.lower_d() / delta) - std::floor(mn.upper_d() / delta) + 1;
        hi += std::floor(mx.upper_d() / delta) - std::floor(mn.lower_d() / delta) + 1;
      }
      out.ks.push_back(N);
      out.count_lo.push_back(lo);
      out.count_hi.push_back(hi);
    }
    if (N == k_max) break;
    std::vector<Cell> next;
    next.reserve(level.size() * 2);
    const RealBound& s = T.scale_pow(N);
    const RealBound& tl = T.slope_pow(N);
    for (const Cell& c : level) {
      next.push_back({c.Fa, c.C + tl});
      next.push_back({c.Fa + (c.C.scaled(-static_cast<long>(N)) + s).scaled(-1), c.C - tl});
    }
    level = std::move(next);
  }
  std::vector<double> l_lo, l_hi, l_mid;
  for (std::size_t i = 0; i < out.ks.size(); ++i) {
    l_lo.push_back(std::log2(out.count_lo[i]));
    l_hi.push_back(std::log2(out.count_hi[i]));
    l_mid.push_back((l_lo.back() + l_hi.back()) / 2);
  }
  const double a = fit_slope(out.ks, l_lo), b = fit_slope(out.ks, l_hi);
  out.slope = {fit_slope(out.ks, l_mid), std::min(a, b), std::max(a, b), true};
  return out;
}

// -- witnesses --------------------------------------------------------------------

Witness mean_value_witness(const ProbePoint& x0, Direction dir, std::size_t n, const Alpha& alpha, double c) {
  std::size_t J = n;
  if (x0.x.kind() == DigitStream::Kind::RuleBased) {
    const RuleSchedule sched = x0.x.schedule().value_or(RuleSchedule{});
    const auto& pairs = sched.dyadic.empty() ? sched.maxima : sched.dyadic;
    if (n >= pairs.size()) throw WitnessNotFound(static_cast<int>(n), "construction has fewer scales");
    J = pairs[n].start;
  }
  if (J == 0) J = 1;
  const std::size_t M = J + 2;
  const std::size_t D = M + static_cast<std::size_t>(std::ceil((J + 40) / alpha.value()));
  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(std::max<std::size_t>(128, D + 64));
  const KnoppTables T(alpha, prec, D + 2);
  RealBound fx = x0.y ? x0.y->with_precision(prec)
                      : (x0.x.is_exact() ? eval_F_exact(x0.x, T) : enclosure_at_depth(x0.x, D, T));
  const Integer Ka = x0.x.prefix(M);
  const Integer top = Integer(1) << M;
  const RealBound need = RealBound(c, prec) * T.scale_pow(J);
  std::optional<Witness> best;
  for (Integer K = Ka - 3; K <= Ka + 3; ++K) {
    if (K < 0 || K >= top) continue;
    if (dir == Direction::Below) {
      for (const Integer& E : {K, Integer(K + 1)}) {
        const RealBound v = E == top ? RealBound(prec) : T.dyadic_value(E, M);
        const RealBound gap = fx - v;
        if (!best || best->gap.lower_d() < gap.lower_d())
          best = Witness{reduced(Rational(E, top)), gap, J};
      }
    } else {
      const DyadicInterval I(K, M);
      const RealBound v = T.dyadic_value(K, M) + T.scale_pow(M) * T.max_value(T.dyadic_slope(K, M) / T.slope_pow(M));
      const RealBound gap = v - fx;
      if (!best || best->gap.lower_d() < gap.lower_d()) best = Witness{argmax_on_interval(I, alpha).front(), gap, J};
    }
  }
  if (!best || !need.certainly_less_equal(best->gap))
    throw WitnessNotFound(static_cast<int>(n), dir == Direction::Below ? "no lower point at this scale"
                                                                       : "no higher point at this scale");
  return *best;
}

// -- output -----------------------------------------------------------------------

void write_csv_header(std::ostream& os) { os << "side,k,r,meas_lo,meas_hi,ratio_lo,ratio_hi,flag\n"; }

void write_csv_rows(std::ostream& os, const ExponentTrace& trace) {
  char buf[512];
  for (const TraceEntry& e : trace.entries) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", to_string(trace.side).c_str(), e.k,
                  e.r, e.measure.lower, e.measure.upper, e.ratio_lo, e.ratio_hi, to_string(e.measure.flag).c_str());
    os << buf;
  }
}

}  // namespace knopp
