#pragma once

// Local geometry of Omega = {0 <= x <= 1, 0 <= y <= F(x)} near a point of its
// boundary: certified areas of Omega and its complement inside sup-norm boxes,
// the log-ratio traces behind the weak and strong accessibility exponents,
// p-exponents of the indicator of Omega, and the box dimension of the graph.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "knopp/digits.hpp"
#include "knopp/knopp.hpp"

namespace knopp {

/// X0 = (x, y); y defaults to F(x).
struct ProbePoint {
  DigitStream x;
  std::optional<RealBound> y;
  std::string label;
};

enum class Side { Omega, OmegaComplement };
std::string to_string(Side s);

enum class MeasureFlag { Ok, ToleranceUnreachable };
std::string to_string(MeasureFlag f);

/// Area of one side inside [x0 - r, x0 + r] x [y0 - r, y0 + r], clipped to 0 <= x <= 1.
struct MeasureBound {
  double lower = 0;
  double upper = 0;
  double r = 0;
  double area = 0;  // area of the clipped box
  MeasureFlag flag = MeasureFlag::Ok;
  std::size_t depth = 0;   // deepest dyadic level refined
  std::size_t leaves = 0;  // intervals examined
};

/// Which side's relative error the refinement has to meet; `Smaller` targets
/// whichever of Omega and its complement is smaller, `Area` the box area.
enum class Target { Omega, OmegaComplement, Smaller, Area };

struct MeasureOptions {
  double rel_tol = 1e-3;
  /// Refinement stops at this dyadic level; 0 means
  /// max(40, ceil(k / alpha) + 10 + ceil(log2(1 / rel_tol) / (2 alpha))).
  std::size_t n_cap = 0;
  /// Intervals examined per radius; the extended-precision path, used for
  /// deep radii, holds its open intervals in memory and stops at 4e6.
  std::size_t leaf_budget = std::size_t{1} << 27;
};

/// Both sides at once, sharing one refinement.
struct BoxMeasure {
  MeasureBound omega;
  MeasureBound complement;
  const MeasureBound& side(Side s) const { return s == Side::Omega ? omega : complement; }
};

/// Reusable geometry context for one probe point: the nominal box centre as
/// exact rationals, its certified distance from the true X0, and the tables.
class BoxProbe {
 public:
  /// Radii down to 2^-k_max are supported.
  BoxProbe(const ProbePoint& x0, const Alpha& alpha, std::size_t k_max, double rel_tol = 1e-3);

  BoxMeasure measure(const Rational& r, Target target, const MeasureOptions& opts) const;
  BoxMeasure measure_k(std::size_t k, Target target, const MeasureOptions& opts) const;

  const Alpha& alpha() const { return alpha_; }
  const Rational& x_nominal() const { return x0_; }
  const Rational& y_nominal() const { return y0_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  std::size_t n_cap(std::size_t k) const;

 private:
  Alpha alpha_;
  std::size_t k_max_;
  double rel_tol_;
  Rational x0_, y0_;
  double dx_ = 0, dy_ = 0;
  std::optional<KnoppTables> tables_;
};

MeasureBound measure_in_box(const ProbePoint& x0, const Rational& r, Side side, const Alpha& alpha,
                            double rel_tol = 1e-3);

struct TraceEntry {
  std::size_t k;
  double r;
  MeasureBound measure;
  double ratio_lo;  // log(meas) / log(r) - 2, bracketed
  double ratio_hi;
  bool flagged() const { return measure.flag != MeasureFlag::Ok; }
};

struct Summary {
  double est = 0, lo = 0, hi = 0;
  bool valid = false;
};

struct ExponentTrace {
  Side side;
  std::vector<TraceEntry> entries;
  Summary weak;    // min of ratio upper bounds over the window
  Summary strong;  // max of ratio lower bounds over the window
  std::size_t window = 0;
  std::size_t k_min = 0, k_max = 0;
  double rel_tol = 0;
};

/// ratio bracket for a measure bracket at radius r.
std::pair<double, double> log_ratio(double meas_lo, double meas_hi, double r);

ExponentTrace exponent_trace(const ProbePoint& x0, Side side, const Alpha& alpha, std::size_t k_min,
                             std::size_t k_max, double rel_tol = 1e-3);
/// Both sides from one refinement per radius.
std::pair<ExponentTrace, ExponentTrace> exponent_traces(const ProbePoint& x0, const Alpha& alpha, std::size_t k_min,
                                                        std::size_t k_max, double rel_tol = 1e-3);
/// Radii 2^-k for each k in `scales` (strictly increasing).
ExponentTrace exponent_trace_on_subsequence(const ProbePoint& x0, Side side, const Alpha& alpha,
                                            const std::vector<std::size_t>& scales, double rel_tol = 1e-3);

/// Fills weak / strong over the last ceil((k_max - k_min) / 3) unflagged entries.
void summarize(ExponentTrace& trace);

/// Least-squares slope of log(meas) on log(r), minus 2, over the summary
/// window. Free of the constant factor that biases single-radius ratios at
/// finite k; a diagnostic next to the window summaries.
Summary regression_exponent(const ExponentTrace& trace);

/// Radii 2^-k_n at which a rule-based x looks like an extremum: k_n =
/// floor(alpha J'_n) - 1 for each schedule pair (J_n, J'_n) with J_n < k_n <=
/// k_limit. Dyadic pairs serve the complement, maxima pairs serve Omega.
std::vector<std::size_t> strong_scales(const DigitStream& x, Side side, const Alpha& alpha, std::size_t k_limit);

struct PEntry {
  std::size_t k;
  double fraction_lo, fraction_hi;  // meas(Omega in box) / area
  double value_lo, value_hi;        // min over c of the normalised p-mean of |1_Omega - c|
  MeasureFlag flag = MeasureFlag::Ok;
};

struct PExponent {
  double p;
  std::vector<PEntry> entries;
  Summary u;  // slope of log(value) against log(rho) over the window
  std::size_t window = 0;
};

/// (c^p (1 - m) + (1 - c)^p m)^(1/p) minimised over c in [0, 1].
double optimal_p_mean(double m, double p);

PExponent p_exponent_direct(const ProbePoint& x0, double p, const Alpha& alpha, std::size_t k_min, std::size_t k_max,
                            double rel_tol = 1e-3);

struct BoxDimension {
  std::vector<std::size_t> ks;
  std::vector<double> count_lo, count_hi;  // N(k) bracket
  Summary slope;                           // least-squares slope of log2 N(k) on k
};

/// Box counting on the graph with exact oscillation per dyadic interval.
BoxDimension box_dimension(const Alpha& alpha, std::size_t k_min, std::size_t k_max);

enum class Direction { Below, Above };

struct Witness {
  Rational x;
  RealBound gap;   // F(x0) - F(x) below, F(x) - F(x0) above
  std::size_t J;   // scale: |x - x0| <= 2^-J
};

/// A point within 2^-J of x0 whose value differs from F(x0) by at least
/// c 2^(-alpha J) on the requested side. J is the n-th construction scale of
/// a rule-based x0 and n otherwise. Throws WitnessNotFound.
Witness mean_value_witness(const ProbePoint& x0, Direction dir, std::size_t n, const Alpha& alpha,
                           double c = 1.0 / 64);

/// `side,k,r,meas_lo,meas_hi,ratio_lo,ratio_hi,flag` rows.
void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const ExponentTrace& trace);

}  // namespace knopp
