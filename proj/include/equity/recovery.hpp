#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "equity/types.hpp"

namespace equity::recovery {

enum class RecoveryKind {
  total_hours,   // total hours below threshold across the day (default)
  longest_run,   // longest consecutive below-threshold run
};

enum class QuadratureRule {
  trapezoid,   // default
  rectangle,   // left-endpoint sum, for strict reproduction runs
};

struct ThresholdGrid {
  double lo = 0.3;
  double hi = 0.8;
  double step = 0.1;

  // Ascending list of levels lo, lo+step, ..., hi. Errors when the step does
  // not divide the range or the range is degenerate or outside (0,1).
  std::vector<double> levels() const;
};

// Hours of the 24-value profile spent strictly below l. Values are treated as
// piecewise constant over their hour.
int recovery_time(std::span<const double> zeta, double l,
                  RecoveryKind kind = RecoveryKind::total_hours);

// Integral of R_l over the threshold grid. Bounded by 24 * (hi - lo).
double sr_integral(std::span<const double> zeta, const ThresholdGrid& grid = {},
                   RecoveryKind kind = RecoveryKind::total_hours,
                   QuadratureRule rule = QuadratureRule::trapezoid);

// Band 0 iff sr == 0; bands 1-4 cover (0,3], (3,6], (6,9], (9,12]. Errors
// outside [0,12].
int categorize_sr(double sr);

struct RecoveryProfile {
  std::string zone_id;
  std::vector<double> thresholds;
  std::vector<int> hours_below;  // R per threshold, aligned with thresholds
  double sr = 0.0;
  int sr_category = 0;
};

RecoveryProfile profile_zone(const std::string& zone_id, std::span<const double> zeta,
                             const ThresholdGrid& grid = {},
                             RecoveryKind kind = RecoveryKind::total_hours,
                             QuadratureRule rule = QuadratureRule::trapezoid);

}  // namespace equity::recovery
