#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "equity/ingest.hpp"

namespace equity::demographics {

// The five disadvantage dimensions, in bit order. A combination is a nonzero
// 5-bit mask; a person belongs to it when every member flag is set.
enum Flag : unsigned {
  kLimitedEnglish = 1u << 0,
  kNonWhite = 1u << 1,
  kUnderPoverty = 1u << 2,
  kNoVehicle = 1u << 3,
  kUnemployed = 1u << 4,
};

constexpr int kFlagCount = 5;
constexpr unsigned kAllFlags = (1u << kFlagCount) - 1;  // 31 combinations: masks 1..31

// Stable short names, bit order: limited_english, non_white, under_poverty,
// no_vehicle, unemployed.
const std::array<std::string, kFlagCount>& flag_names();

// "limited_english+under_poverty" style label for a combination mask.
std::string combination_label(unsigned mask);

struct PovertyTable {
  // family size -> annual income threshold
  std::map<int, double> thresholds;

  // Strict less-than: income at the threshold is not under poverty. Errors
  // when the size has no entry.
  bool under_poverty(double household_income, int family_size) const;
};

PovertyTable load_poverty_table(const std::string& path);

struct PersonFlags {
  std::string person_id;
  std::string zone_id;
  unsigned flags = 0;  // bit i set per Flag
};

// Derive per-person flags from the joined population table. Membership rules:
// limited_english when the english field marks less-than-"very well"
// proficiency; non_white when race is anything but the configured white
// category; under_poverty from the threshold table; no_vehicle when the
// household owns zero vehicles; unemployed when the employment field marks
// unemployment.
std::vector<PersonFlags> flag_persons(const ingest::PopulationTable& pop,
                                      const PovertyTable& poverty);

struct SegmentCounts {
  unsigned mask = 0;
  std::string label;
  std::map<std::string, std::int64_t> zone_counts;  // zone -> members of the combination
};

// Per-zone member counts for every one of the 31 combinations.
std::vector<SegmentCounts> segment_population(std::span<const PersonFlags> persons);

struct SegmentOverlay {
  unsigned mask = 0;
  std::string label;
  std::map<std::string, double> zone_percentage;  // zones with population > 0 only
  double cutoff = 0.0;                    // nearest-rank percentile of the percentages
  std::vector<std::string> masked_zones;  // percentage >= cutoff, sorted
};

// Percentages use the zone's total person count as the denominator; zero
// population zones are excluded from the percentile and never masked. The
// cutoff is nearest-rank (ceil(p * N)) over zone percentages, and ties at
// the boundary are included in the mask.
std::vector<SegmentOverlay> combine_segments(
    std::span<const SegmentCounts> segments,
    const std::map<std::string, std::int64_t>& zone_population, double percentile = 0.75);

}  // namespace equity::demographics
