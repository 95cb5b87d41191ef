#include "equity/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace equity::metrics {

std::vector<double> minmax(std::span<const double> values) {
  if (values.empty()) {
    throw InternalError("minmax normalization over an empty vector");
  }
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi > lo) {
    const double span = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = (values[i] - lo) / span;
    }
  }
  return out;
}

std::vector<double> percentile_rank(std::span<const double> values) {
  if (values.empty()) {
    throw InternalError("percentile rank over an empty vector");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto ub = std::upper_bound(sorted.begin(), sorted.end(), values[i]);
    out[i] = static_cast<double>(ub - sorted.begin()) / n;
  }
  return out;
}

std::vector<double> lognorm(std::span<const double> values) {
  std::vector<double> logged(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      throw InternalError("log normalization requires non-negative values");
    }
    logged[i] = std::log1p(values[i]);
  }
  return minmax(logged);
}

std::vector<double> disparity(std::span<const double> pm, std::span<const double> population) {
  if (pm.size() != population.size()) {
    throw InternalError("disparity inputs differ in length");
  }
  std::vector<double> eta = percentile_rank(population);
  std::vector<double> product(pm.size());
  for (std::size_t i = 0; i < pm.size(); ++i) {
    product[i] = pm[i] * eta[i];
  }
  return minmax(product);
}

std::vector<double> parent_means(std::span<const AccessZone> zones) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& z : zones) {
    auto& [sum, count] = acc[z.parent_id];
    sum += z.reach_area;
    count += 1;
  }
  std::vector<double> k(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto& [sum, count] = acc.at(zones[i].parent_id);
    k[i] = sum / static_cast<double>(count);
  }
  return k;
}

std::vector<AccessScore> i_access_with_k(std::span<const AccessZone> zones,
                                         std::span<const double> k) {
  if (zones.size() != k.size()) {
    throw InternalError("access scoring inputs differ in length");
  }
  if (zones.empty()) {
    throw InternalError("access scoring over an empty zone set");
  }
  std::vector<AccessScore> out(zones.size());
  std::vector<double> logged(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    auto& s = out[i];
    s.zone_id = zones[i].zone_id;
    s.parent_mean = k[i];
    if (k[i] <= 0.0) {
      // A parent area whose zones reach no activity space at all gives no
      // yardstick; treat its members as having nothing to fall short of.
      s.parent_degenerate = true;
      s.deficit = 0.0;
    } else if (zones[i].reach_area >= k[i]) {
      s.deficit = 0.0;
    } else {
      const double gap = (k[i] - zones[i].reach_area) / k[i];
      s.deficit = gap * gap;
    }
    s.insufficiency_raw = zones[i].population * s.deficit;
    s.insufficiency_log = std::log1p(zones[i].population) * std::log1p(s.deficit);
    logged[i] = s.insufficiency_log;
  }
  std::vector<double> normed = minmax(logged);
  for (std::size_t i = 0; i < zones.size(); ++i) {
    out[i].i_access = normed[i];
  }
  return out;
}

std::vector<AccessScore> i_access(std::span<const AccessZone> zones) {
  return i_access_with_k(zones, parent_means(zones));
}

std::vector<double> zi_access(std::span<const double> z, std::span<const AccessScore> access) {
  if (z.size() != access.size()) {
    throw InternalError("performance-integrated insufficiency inputs differ in length");
  }
  std::vector<double> logged(access.size());
  for (std::size_t i = 0; i < access.size(); ++i) {
    logged[i] = access[i].insufficiency_log;
  }
  std::vector<double> eta = percentile_rank(logged);
  std::vector<double> product(access.size());
  for (std::size_t i = 0; i < access.size(); ++i) {
    product[i] = z[i] * eta[i];
  }
  return minmax(product);
}

}  // namespace equity::metrics
