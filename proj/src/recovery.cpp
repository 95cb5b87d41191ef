#include "equity/recovery.hpp"

#include <algorithm>
#include <cmath>

namespace equity::recovery {

std::vector<double> ThresholdGrid::levels() const {
  if (!(lo > 0.0) || !(hi < 1.0) || !(hi > lo) || !(step > 0.0)) {
    throw ConfigError("recovery threshold range must satisfy 0 < lo < hi < 1 with a positive step");
  }
  const double span = hi - lo;
  const double ratio = span / step;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw ConfigError("recovery threshold step does not divide the range");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) {
    out.push_back(lo + step * static_cast<double>(i));
  }
  out.back() = hi;
  return out;
}

int recovery_time(std::span<const double> zeta, double l, RecoveryKind kind) {
  if (zeta.size() != 24) {
    throw InternalError("recovery time expects a 24-hour profile");
  }
  int total = 0;
  int run = 0;
  int longest = 0;
  for (double v : zeta) {
    if (v < l) {
      ++total;
      ++run;
      longest = std::max(longest, run);
    } else {
      run = 0;
    }
  }
  return kind == RecoveryKind::total_hours ? total : longest;
}

double sr_integral(std::span<const double> zeta, const ThresholdGrid& grid, RecoveryKind kind,
                   QuadratureRule rule) {
  const std::vector<double> ls = grid.levels();
  std::vector<double> r(ls.size());
  for (std::size_t i = 0; i < ls.size(); ++i) {
    r[i] = static_cast<double>(recovery_time(zeta, ls[i], kind));
  }
  // The grid is uniform by construction, so sum the quadrature weights first
  // and scale by the step once; this keeps the all-below profile at exactly
  // 24 * (hi - lo).
  double weighted = 0.0;
  if (rule == QuadratureRule::trapezoid) {
    weighted += 0.5 * (r.front() + r.back());
    for (std::size_t i = 1; i + 1 < ls.size(); ++i) weighted += r[i];
  } else {
    for (std::size_t i = 0; i + 1 < ls.size(); ++i) weighted += r[i];
  }
  return weighted * grid.step;
}

int categorize_sr(double sr) {
  if (sr < -1e-9 || sr > 12.0 + 1e-9) {
    throw InternalError("service-recovery value outside [0, 12]");
  }
  if (sr <= 0.0) return 0;
  if (sr <= 3.0 + 1e-9) return 1;
  if (sr <= 6.0 + 1e-9) return 2;
  if (sr <= 9.0 + 1e-9) return 3;
  return 4;
}

RecoveryProfile profile_zone(const std::string& zone_id, std::span<const double> zeta,
                             const ThresholdGrid& grid, RecoveryKind kind, QuadratureRule rule) {
  RecoveryProfile p;
  p.zone_id = zone_id;
  p.thresholds = grid.levels();
  p.hours_below.reserve(p.thresholds.size());
  for (double l : p.thresholds) {
    p.hours_below.push_back(recovery_time(zeta, l, kind));
  }
  p.sr = sr_integral(zeta, grid, kind, rule);
  p.sr_category = categorize_sr(p.sr);
  return p;
}

}  // namespace equity::recovery
