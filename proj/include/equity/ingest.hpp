#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "equity/geometry.hpp"
#include "equity/types.hpp"

namespace equity::ingest {

// Maps semantic trip fields onto one vendor schema era. Loaded from a
// key = value text file; presets for both schema eras ship under configs/.
struct ColumnMap {
  char delimiter = ',';
  std::string timestamp_format = "%Y-%m-%d %H:%M:%S";
  std::string member_column;
  std::vector<std::string> member_true_values;  // row is a member trip iff value matches one
  std::string start_time_column;
  std::string end_time_column;
  std::string start_station_column;
  std::string end_station_column;
  std::string start_lat_column;
  std::string start_lon_column;
  std::string end_lat_column;
  std::string end_lon_column;

  bool is_member_value(const std::string& v) const;
};

ColumnMap load_column_map(std::istream& in, const std::string& source_name);
ColumnMap load_column_map_file(const std::string& path);

struct ParseTally {
  std::uint64_t rows_total = 0;
  std::uint64_t accepted = 0;
  std::uint64_t bad_field_count = 0;
  std::uint64_t bad_timestamp = 0;
  std::uint64_t missing_station = 0;
  std::uint64_t bad_coordinate = 0;   // unparseable or missing lat/lon
  std::uint64_t out_of_bbox = 0;
  std::uint64_t skipped() const {
    return bad_field_count + bad_timestamp + missing_station + bad_coordinate + out_of_bbox;
  }
};

// One RawTrip per well-formed row; malformed rows are tallied, never fatal.
// A mapped column missing from the header is a configuration error.
std::vector<RawTrip> parse_trips(std::istream& in, const ColumnMap& map, const BoundingBox& box,
                                 ParseTally& tally);

struct FilterTally {
  std::uint64_t input = 0;
  std::uint64_t accepted = 0;
  std::uint64_t non_member = 0;
  std::uint64_t duration_out_of_range = 0;  // <= 60 s or >= 14400 s
  std::uint64_t speed_too_high = 0;         // >= 650 m/min
  std::uint64_t crosses_midnight = 0;       // start and end dates differ
};

// Applies the four cleaning filters. Distance is planar Euclidean between the
// projected endpoints; speed is meters per minute. Acceptance is the
// conjunction of all predicates, so it is order-independent; the tally
// attributes each rejection to the first failing predicate in spec order.
std::vector<TripRecord> clean_trips(const std::vector<RawTrip>& trips,
                                    const geom::Projection& projection, FilterTally& tally);

struct ZoneGeometry {
  std::string zone_id;
  std::string parent_id;
  std::vector<geom::LonLatRing> rings;  // first ring is the shell
};

// Reads polygon features from a GeoJSON FeatureCollection. Every feature must
// carry both id properties; duplicate zone ids and non-polygonal geometries
// are errors naming the offender.
std::vector<ZoneGeometry> load_zones(const std::string& path, const std::string& id_property,
                                     const std::string& parent_property);

enum class ActivityCategory { commute, recreational };

struct ActivityZoneSet {
  std::vector<std::vector<geom::LonLatRing>> commute;
  std::vector<std::vector<geom::LonLatRing>> recreational;
  std::uint64_t unmatched_tags = 0;
};

// Tag prefix -> categories, longest prefix wins. Zoning labels come in
// families ("C4-3", "M1-1", "PARK"), hence prefix matching.
using ActivityTagMap = std::map<std::string, std::vector<ActivityCategory>>;

ActivityTagMap default_activity_tag_map();

ActivityZoneSet load_activity_zones(const std::string& path, const std::string& tag_property,
                                    const ActivityTagMap& tag_map);

struct Person {
  std::string person_id;
  std::string household_id;
  std::string zone_id;
  std::string race;
  std::string english;     // "limited" flags limited proficiency
  std::string employment;  // "unemployed" flags unemployment
  // joined household attributes
  double household_income = 0.0;
  int family_size = 0;
  int vehicles = 0;
};

struct PopulationTable {
  std::vector<Person> persons;
  std::map<std::string, std::int64_t> zone_counts;
};

// Joins person rows to household rows on the household key. Any person whose
// key is absent from the household table is an error reporting the orphan
// count.
PopulationTable load_population(std::istream& persons, std::istream& households);
PopulationTable load_population_files(const std::string& persons_path,
                                      const std::string& households_path);

}  // namespace equity::ingest
