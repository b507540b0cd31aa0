#pragma once

// Acceptance checks for the Takagi-Knopp geometry: one function per criterion,
// grouped into the named suites the command line exposes.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace knopp::verify {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  bool pass() const;
};

struct Options {
  /// Restricts multi-alpha criteria to this alpha when set.
  std::optional<double> alpha;
  double rel_tol = 1e-3;
  std::uint64_t seed = 1;
  /// Called after every finished check.
  std::function<void(const Check&)> on_check;
};

CriterionResult dyadic_points(const Options& opts);        // 1
CriterionResult local_maxima(const Options& opts);         // 2
CriterionResult non_extrema(const Options& opts);          // 3
CriterionResult d_alpha_subsequence(const Options& opts);  // 4
CriterionResult p_exponent_relation(const Options& opts);  // 5
CriterionResult box_dimension_slope(const Options& opts);  // 6
CriterionResult exact_values(const Options& opts);         // 7
CriterionResult extrema_oracle(const Options& opts);       // 8
CriterionResult invariant_suite(const Options& opts);      // 9

/// dyadic, maxima, nonextremum, dalpha, pexponent, boxdim, invariants, all.
const std::vector<std::string>& suite_names();
/// Criterion ids a suite runs; throws OutOfDomain for unknown names.
std::vector<int> suite_criteria(std::string_view suite);
CriterionResult run_criterion(int id, const Options& opts);

}  // namespace knopp::verify
