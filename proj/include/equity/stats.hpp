#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "equity/types.hpp"

namespace equity::stats {

struct TTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;  // Welch-Satterthwaite
};

// Welch two-sample t-test, two-sided. Errors when either sample has fewer
// than 2 values. Two constant samples degenerate gracefully: equal means
// give p = 1, distinct means give p = 0.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct KsTestResult {
  double statistic = 0.0;  // sup |F_a - F_b|
  double p_value = 1.0;
  bool exact = false;  // exact path-count null (combined n < 50) vs asymptotic
};

// Two-sample Kolmogorov-Smirnov test. Small samples use the exact
// distribution-free null via lattice-path counting; larger ones use the
// asymptotic Kolmogorov series.
KsTestResult ks_test(std::span<const double> a, std::span<const double> b);

struct GroupSummary {
  std::string name;
  std::size_t n = 0;
  double mean = 0.0;
};

struct ComparisonReport {
  GroupSummary group_a;
  GroupSummary group_b;
  std::optional<TTestResult> t_test;  // absent when a group has < 2 members
  std::string t_test_note;            // why absent, when absent
  KsTestResult ks;
};

// Compare the masked group against its complement. `mask` aligns with
// `values`; both groups must be nonempty.
ComparisonReport compare_groups(std::span<const double> values, std::span<const bool> mask,
                                const std::string& name_in, const std::string& name_out);

}  // namespace equity::stats
