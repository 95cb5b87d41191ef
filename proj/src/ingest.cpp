#include "equity/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "equity/csv.hpp"

namespace equity::ingest {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

}  // namespace

bool ColumnMap::is_member_value(const std::string& v) const {
  for (const std::string& t : member_true_values) {
    if (v == t) return true;
  }
  return false;
}

ColumnMap load_column_map(std::istream& in, const std::string& source_name) {
  ColumnMap map;
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!kv.emplace(key, value).second) {
      throw ConfigError(source_name + ": field '" + key + "' mapped more than once");
    }
  }

  auto take = [&](const std::string& key, std::string& dest, bool required) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw ConfigError(source_name + ": missing required field '" + key + "'");
      return;
    }
    dest = it->second;
    kv.erase(it);
  };

  std::string delim_str;
  take("delimiter", delim_str, false);
  if (delim_str.size() > 1) throw ConfigError(source_name + ": delimiter must be one character");
  if (delim_str.size() == 1) map.delimiter = delim_str[0];
  std::string fmt;
  take("timestamp_format", fmt, false);
  if (!fmt.empty()) map.timestamp_format = fmt;

  take("member", map.member_column, true);
  std::string member_true;
  take("member_true", member_true, true);
  std::stringstream ms(member_true);
  std::string tok;
  while (std::getline(ms, tok, '|')) {
    const std::string t = trim(tok);
    if (!t.empty()) map.member_true_values.push_back(t);
  }
  if (map.member_true_values.empty()) {
    throw ConfigError(source_name + ": member_true lists no values");
  }
  take("start_time", map.start_time_column, true);
  take("end_time", map.end_time_column, true);
  take("start_station_id", map.start_station_column, true);
  take("end_station_id", map.end_station_column, true);
  take("start_lat", map.start_lat_column, true);
  take("start_lon", map.start_lon_column, true);
  take("end_lat", map.end_lat_column, true);
  take("end_lon", map.end_lon_column, true);
  if (!kv.empty()) {
    throw ConfigError(source_name + ": unknown field '" + kv.begin()->first + "'");
  }
  return map;
}

ColumnMap load_column_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open column map " + path);
  return load_column_map(in, path);
}

std::vector<RawTrip> parse_trips(std::istream& in, const ColumnMap& map, const BoundingBox& box,
                                 ParseTally& tally) {
  csv::Reader reader(in, map.delimiter);
  struct Cols {
    int member, start_time, end_time, start_station, end_station;
    int start_lat, start_lon, end_lat, end_lon;
  } col{};
  auto need = [&](const std::string& name) {
    const int idx = reader.column(name);
    if (idx < 0) throw ConfigError("trip file is missing mapped column '" + name + "'");
    return idx;
  };
  col.member = need(map.member_column);
  col.start_time = need(map.start_time_column);
  col.end_time = need(map.end_time_column);
  col.start_station = need(map.start_station_column);
  col.end_station = need(map.end_station_column);
  col.start_lat = need(map.start_lat_column);
  col.start_lon = need(map.start_lon_column);
  col.end_lat = need(map.end_lat_column);
  col.end_lon = need(map.end_lon_column);

  const std::size_t min_fields = reader.header().size();
  std::vector<RawTrip> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++tally.rows_total;
    if (f.size() < min_fields) {
      ++tally.bad_field_count;
      continue;
    }
    RawTrip t;
    const auto start = parse_timestamp(f[col.start_time], map.timestamp_format);
    const auto end = parse_timestamp(f[col.end_time], map.timestamp_format);
    if (!start || !end) {
      ++tally.bad_timestamp;
      continue;
    }
    t.start_time = *start;
    t.end_time = *end;
    t.start_station_id = trim(f[col.start_station]);
    t.end_station_id = trim(f[col.end_station]);
    if (t.start_station_id.empty() || t.end_station_id.empty()) {
      ++tally.missing_station;
      continue;
    }
    if (!parse_double(f[col.start_lat], t.start_lat) || !parse_double(f[col.start_lon], t.start_lon) ||
        !parse_double(f[col.end_lat], t.end_lat) || !parse_double(f[col.end_lon], t.end_lon)) {
      ++tally.bad_coordinate;
      continue;
    }
    if (!box.contains(t.start_lon, t.start_lat) || !box.contains(t.end_lon, t.end_lat)) {
      ++tally.out_of_bbox;
      continue;
    }
    t.member = map.is_member_value(trim(f[col.member]));
    out.push_back(std::move(t));
    ++tally.accepted;
  }
  return out;
}

std::vector<TripRecord> clean_trips(const std::vector<RawTrip>& trips,
                                    const geom::Projection& projection, FilterTally& tally) {
  std::vector<TripRecord> out;
  out.reserve(trips.size());
  for (const RawTrip& raw : trips) {
    ++tally.input;
    const std::int64_t duration = raw.end_time - raw.start_time;
    const geom::PlanarPoint a = projection.project(raw.start_lon, raw.start_lat);
    const geom::PlanarPoint b = projection.project(raw.end_lon, raw.end_lat);
    const double distance = std::hypot(b.x - a.x, b.y - a.y);
    // speed only defined for positive durations; non-positive ones already
    // fail the duration filter
    const double speed = duration > 0 ? distance / (static_cast<double>(duration) / 60.0) : 0.0;

    const bool member_ok = raw.member;
    const bool duration_ok = duration > 60 && duration < 14400;  // strict bounds
    const bool speed_ok = duration_ok && speed < 650.0;
    const bool date_ok = civil_day(raw.start_time) == civil_day(raw.end_time);

    if (member_ok && duration_ok && speed_ok && date_ok) {
      TripRecord rec;
      static_cast<RawTrip&>(rec) = raw;
      rec.duration_s = duration;
      rec.euclidean_distance_m = distance;
      rec.speed_m_per_min = speed;
      out.push_back(std::move(rec));
      ++tally.accepted;
    } else if (!member_ok) {
      ++tally.non_member;
    } else if (!duration_ok) {
      ++tally.duration_out_of_range;
    } else if (!speed_ok) {
      ++tally.speed_too_high;
    } else {
      ++tally.crosses_midnight;
    }
  }
  return out;
}

namespace {

using nlohmann::json;

std::string property_as_string(const json& props, const std::string& key, std::size_t feature_index) {
  if (!props.contains(key)) {
    throw InputError("feature " + std::to_string(feature_index) + ": missing property '" + key + "'");
  }
  const json& v = props.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return csv::format_value(v.get<double>());
  throw InputError("feature " + std::to_string(feature_index) + ": property '" + key +
                   "' is not a string");
}

geom::LonLatRing read_ring(const json& coords) {
  geom::LonLatRing ring;
  for (const json& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) throw InputError("malformed ring coordinate");
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  // ring closure is the one repair this loader performs
  if (ring.size() >= 2) {
    const auto& first = ring.front();
    const auto& last = ring.back();
    if (first.lon != last.lon || first.lat != last.lat) ring.push_back(first);
  }
  return ring;
}

std::vector<geom::LonLatRing> read_polygon_rings(const json& geometry, std::size_t feature_index) {
  const std::string type = geometry.value("type", "");
  const json& coords = geometry.at("coordinates");
  if (type == "Polygon") {
    std::vector<geom::LonLatRing> rings;
    for (const json& r : coords) rings.push_back(read_ring(r));
    return rings;
  }
  if (type == "MultiPolygon") {
    if (coords.size() == 1) {
      std::vector<geom::LonLatRing> rings;
      for (const json& r : coords[0]) rings.push_back(read_ring(r));
      return rings;
    }
    throw InputError("feature " + std::to_string(feature_index) +
                     ": MultiPolygon with more than one component is not a single zone polygon");
  }
  throw InputError("feature " + std::to_string(feature_index) + ": geometry type '" + type +
                   "' is not polygonal");
}

json load_feature_collection(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw InputError(path + ": expected a GeoJSON FeatureCollection");
  }
  return doc;
}

}  // namespace

std::vector<ZoneGeometry> load_zones(const std::string& path, const std::string& id_property,
                                     const std::string& parent_property) {
  const json doc = load_feature_collection(path);
  std::vector<ZoneGeometry> zones;
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const json& feature : doc.at("features")) {
    ZoneGeometry z;
    const json& props = feature.value("properties", json::object());
    z.zone_id = property_as_string(props, id_property, index);
    z.parent_id = property_as_string(props, parent_property, index);
    if (!seen.insert(z.zone_id).second) {
      throw InputError(path + ": duplicate zone_id '" + z.zone_id + "'");
    }
    z.rings = read_polygon_rings(feature.at("geometry"), index);
    zones.push_back(std::move(z));
    ++index;
  }
  return zones;
}

ActivityTagMap default_activity_tag_map() {
  return {
      {"C", {ActivityCategory::commute, ActivityCategory::recreational}},
      {"M", {ActivityCategory::commute}},
      {"PARK", {ActivityCategory::recreational}},
  };
}

ActivityZoneSet load_activity_zones(const std::string& path, const std::string& tag_property,
                                    const ActivityTagMap& tag_map) {
  const json doc = load_feature_collection(path);
  ActivityZoneSet set;
  std::size_t index = 0;
  for (const json& feature : doc.at("features")) {
    const json& props = feature.value("properties", json::object());
    const std::string tag = property_as_string(props, tag_property, index);
    // longest matching prefix
    const std::vector<ActivityCategory>* categories = nullptr;
    std::size_t best = 0;
    for (const auto& [prefix, cats] : tag_map) {
      if (tag.rfind(prefix, 0) == 0 && prefix.size() >= best) {
        best = prefix.size();
        categories = &cats;
      }
    }
    if (!categories) {
      ++set.unmatched_tags;
      ++index;
      continue;
    }
    auto rings = read_polygon_rings(feature.at("geometry"), index);
    for (ActivityCategory c : *categories) {
      if (c == ActivityCategory::commute) set.commute.push_back(rings);
      else set.recreational.push_back(rings);
    }
    ++index;
  }
  return set;
}

PopulationTable load_population(std::istream& persons, std::istream& households) {
  struct Household {
    double income = 0.0;
    int family_size = 0;
    int vehicles = 0;
  };
  std::map<std::string, Household> by_id;
  {
    csv::Reader reader(households, ',');
    const int c_id = reader.column("household_id");
    const int c_income = reader.column("income");
    const int c_size = reader.column("family_size");
    const int c_vehicles = reader.column("vehicles");
    if (c_id < 0 || c_income < 0 || c_size < 0 || c_vehicles < 0) {
      throw InputError("household table must have household_id, income, family_size, vehicles");
    }
    std::vector<std::string> f;
    while (reader.next(f)) {
      Household h;
      std::int64_t size = 0, vehicles = 0;
      if (!parse_double(f[c_income], h.income) || !parse_int(f[c_size], size) ||
          !parse_int(f[c_vehicles], vehicles)) {
        throw InputError("household row " + std::to_string(reader.rows_read()) +
                         ": unparseable numeric field");
      }
      h.family_size = static_cast<int>(size);
      h.vehicles = static_cast<int>(vehicles);
      by_id[f[c_id]] = h;
    }
  }

  PopulationTable table;
  std::uint64_t orphans = 0;
  {
    csv::Reader reader(persons, ',');
    const int c_pid = reader.column("person_id");
    const int c_hid = reader.column("household_id");
    const int c_zone = reader.column("zone_id");
    const int c_race = reader.column("race");
    const int c_english = reader.column("english");
    const int c_emp = reader.column("employment");
    if (c_pid < 0 || c_hid < 0 || c_zone < 0 || c_race < 0 || c_english < 0 || c_emp < 0) {
      throw InputError(
          "person table must have person_id, household_id, zone_id, race, english, employment");
    }
    std::vector<std::string> f;
    while (reader.next(f)) {
      auto it = by_id.find(f[c_hid]);
      if (it == by_id.end()) {
        ++orphans;
        continue;
      }
      Person p;
      p.person_id = f[c_pid];
      p.household_id = f[c_hid];
      p.zone_id = f[c_zone];
      p.race = f[c_race];
      p.english = f[c_english];
      p.employment = f[c_emp];
      p.household_income = it->second.income;
      p.family_size = it->second.family_size;
      p.vehicles = it->second.vehicles;
      table.persons.push_back(std::move(p));
    }
  }
  if (orphans > 0) {
    throw InputError(std::to_string(orphans) +
                     " person row(s) reference household keys absent from the household table");
  }
  for (const Person& p : table.persons) table.zone_counts[p.zone_id] += 1;
  return table;
}

PopulationTable load_population_files(const std::string& persons_path,
                                      const std::string& households_path) {
  std::ifstream p = open_or_throw(persons_path);
  std::ifstream h = open_or_throw(households_path);
  return load_population(p, h);
}

}  // namespace equity::ingest
