#include "equity/demographics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "equity/csv.hpp"

namespace equity::demographics {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

const std::array<std::string, kFlagCount>& flag_names() {
  static const std::array<std::string, kFlagCount> names = {
      "limited_english", "non_white", "under_poverty", "no_vehicle", "unemployed"};
  return names;
}

std::string combination_label(unsigned mask) {
  if (mask == 0 || mask > kAllFlags) {
    throw InternalError("combination mask out of range");
  }
  std::string label;
  for (int i = 0; i < kFlagCount; ++i) {
    if (mask & (1u << i)) {
      if (!label.empty()) label += '+';
      label += flag_names()[static_cast<std::size_t>(i)];
    }
  }
  return label;
}

bool PovertyTable::under_poverty(double household_income, int family_size) const {
  auto it = thresholds.find(family_size);
  if (it == thresholds.end()) {
    throw InputError("poverty table has no threshold for family size " +
                     std::to_string(family_size));
  }
  return household_income < it->second;
}

PovertyTable load_poverty_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open poverty table: " + path);
  }
  csv::Reader reader(in, ',');
  const int c_size = reader.column("family_size");
  const int c_thr = reader.column("threshold");
  if (c_size < 0 || c_thr < 0) {
    throw ConfigError("poverty table must have family_size and threshold columns: " + path);
  }
  PovertyTable table;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    int size = 0;
    double thr = 0.0;
    try {
      size = std::stoi(fields[static_cast<std::size_t>(c_size)]);
      thr = std::stod(fields[static_cast<std::size_t>(c_thr)]);
    } catch (const std::exception&) {
      throw ConfigError("poverty table row " + std::to_string(reader.rows_read()) +
                        " is not numeric: " + path);
    }
    if (size < 1 || thr <= 0.0) {
      throw ConfigError("poverty table requires positive sizes and thresholds: " + path);
    }
    if (!table.thresholds.emplace(size, thr).second) {
      throw ConfigError("poverty table lists family size " + std::to_string(size) + " twice: " +
                        path);
    }
  }
  if (table.thresholds.empty()) {
    throw ConfigError("poverty table is empty: " + path);
  }
  return table;
}

std::vector<PersonFlags> flag_persons(const ingest::PopulationTable& pop,
                                      const PovertyTable& poverty) {
  std::vector<PersonFlags> out;
  out.reserve(pop.persons.size());
  for (const auto& p : pop.persons) {
    PersonFlags f;
    f.person_id = p.person_id;
    f.zone_id = p.zone_id;
    if (lower(p.english) == "limited") f.flags |= kLimitedEnglish;
    if (lower(p.race) != "white") f.flags |= kNonWhite;
    if (poverty.under_poverty(p.household_income, p.family_size)) f.flags |= kUnderPoverty;
    if (p.vehicles == 0) f.flags |= kNoVehicle;
    if (lower(p.employment) == "unemployed") f.flags |= kUnemployed;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<SegmentCounts> segment_population(std::span<const PersonFlags> persons) {
  std::vector<SegmentCounts> out(kAllFlags);
  for (unsigned mask = 1; mask <= kAllFlags; ++mask) {
    out[mask - 1].mask = mask;
    out[mask - 1].label = combination_label(mask);
  }
  for (const auto& p : persons) {
    for (unsigned mask = 1; mask <= kAllFlags; ++mask) {
      if ((p.flags & mask) == mask) {
        out[mask - 1].zone_counts[p.zone_id] += 1;
      }
    }
  }
  return out;
}

std::vector<SegmentOverlay> combine_segments(
    std::span<const SegmentCounts> segments,
    const std::map<std::string, std::int64_t>& zone_population, double percentile) {
  if (!(percentile > 0.0) || !(percentile < 1.0)) {
    throw ConfigError("overlay percentile must lie in (0, 1)");
  }
  std::vector<SegmentOverlay> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    SegmentOverlay ov;
    ov.mask = seg.mask;
    ov.label = seg.label;
    for (const auto& [zone, total] : zone_population) {
      if (total <= 0) continue;  // percentage undefined, excluded and never masked
      auto it = seg.zone_counts.find(zone);
      const double count = it == seg.zone_counts.end() ? 0.0 : static_cast<double>(it->second);
      ov.zone_percentage[zone] = count / static_cast<double>(total);
    }
    if (!ov.zone_percentage.empty()) {
      std::vector<double> pct;
      pct.reserve(ov.zone_percentage.size());
      for (const auto& [zone, p] : ov.zone_percentage) pct.push_back(p);
      std::sort(pct.begin(), pct.end());
      // nearest-rank: the ceil(p * N)-th smallest value
      const std::size_t rank = static_cast<std::size_t>(
          std::ceil(percentile * static_cast<double>(pct.size())));
      ov.cutoff = pct[std::max<std::size_t>(rank, 1) - 1];
      for (const auto& [zone, p] : ov.zone_percentage) {
        if (p >= ov.cutoff) {
          ov.masked_zones.push_back(zone);
        }
      }
    }
    out.push_back(std::move(ov));
  }
  return out;
}

}  // namespace equity::demographics
