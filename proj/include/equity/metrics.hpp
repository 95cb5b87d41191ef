#pragma once

#include <span>
#include <string>
#include <vector>

#include "equity/types.hpp"

namespace equity::metrics {

// (v - min) / (max - min); a constant vector maps to all zeros. Errors on
// empty input.
std::vector<double> minmax(std::span<const double> values);

// Percentile rank: eta(v) = |{u : u <= v}| / N, in (0, 1]. Ties share the
// value; monotone non-decreasing.
std::vector<double> percentile_rank(std::span<const double> values);

// minmax over ln(1 + v). Order-preserving; admits zeros; errors on negative
// input.
std::vector<double> lognorm(std::span<const double> values);

// Performance disparity for one hour: minmax(pm * eta(n)) across served
// zones. Callers assign the fixed value 1 to unserved zones.
std::vector<double> disparity(std::span<const double> pm, std::span<const double> population);

struct AccessZone {
  std::string zone_id;
  std::string parent_id;
  double population = 0.0;
  double reach_area = 0.0;  // x: reachable activity area, m^2
};

struct AccessScore {
  std::string zone_id;
  double parent_mean = 0.0;         // k
  double deficit = 0.0;             // ((k - x) / k)^2, 0 when x >= k
  double insufficiency_raw = 0.0;   // n * deficit, the unnormalized Eq. form
  double insufficiency_log = 0.0;   // ln(1+n) * ln(1+deficit), fed to minmax / rank
  double i_access = 0.0;            // in [0, 1]
  bool parent_degenerate = false;   // parent mean area is 0
};

// Parent mean of reach areas, arithmetic and unweighted, over zones sharing
// parent_id.
std::vector<double> parent_means(std::span<const AccessZone> zones);

// Destination-access insufficiency. Zones at or above their parent mean carry
// zero deficit; both factors are log-transformed before multiplying so the
// population and deficit terms contribute on a similar scale, and the final
// minmax spans all zones.
std::vector<AccessScore> i_access(std::span<const AccessZone> zones);

// Variant with caller-supplied parent means, for property tests that hold k
// fixed.
std::vector<AccessScore> i_access_with_k(std::span<const AccessZone> zones,
                                         std::span<const double> k);

// Performance-integrated insufficiency for one hour: minmax over zones of
// z * eta(insufficiency_log). Inputs align index-wise with `access`.
std::vector<double> zi_access(std::span<const double> z, std::span<const AccessScore> access);

}  // namespace equity::metrics
