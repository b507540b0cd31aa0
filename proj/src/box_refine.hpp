#pragma once

// Internal: adaptive refinement of the area of Omega inside a box.

#include <cstddef>
#include <functional>

#include "knopp/knopp.hpp"

namespace knopp::detail {

struct RefineJob {
  const KnoppTables* tables;
  Rational c, d;    // x range inside [0, 1]
  Rational yb, yt;  // y range, yb >= 0
  std::size_t n0;   // level of the initial cover
  std::size_t cap;  // deepest level
  double rel_tol;
  std::size_t leaf_budget;
  /// Stopping scale for the current Omega bracket (lower, upper).
  std::function<double(const Real&, const Real&)> scale;
};

struct RefineResult {
  RealBound lo, hi;  // bracket of the Omega area, before centre slack
  std::size_t leaves = 0;
  std::size_t depth = 0;
  bool converged = false;
  /// Rounding noise, not depth or budget, stopped the refinement.
  bool precision_limited = false;
};

/// Outward-rounded double intervals; cheap, but limited to moderate depth.
RefineResult refine_double(const RefineJob& job);
/// Extended precision at the tables' working precision.
RefineResult refine_mpfr(const RefineJob& job);

}  // namespace knopp::detail
