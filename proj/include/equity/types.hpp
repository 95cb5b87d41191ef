#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace equity {

// Error categories map 1:1 onto CLI exit codes (1/2/3).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

class InternalError : public std::runtime_error {
public:
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Timestamps are local civil time at second resolution, stored as seconds
// since 1970-01-01 00:00:00 of the same (zone-less) civil calendar. No DST
// handling; monthly study windows never straddle a transition.
using CivilSeconds = std::int64_t;

struct CivilDateTime {
  int year = 1970;
  int month = 1;  // 1-12
  int day = 1;    // 1-31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

std::int64_t days_from_civil(int y, int m, int d);
CivilDateTime civil_from_seconds(CivilSeconds t);
CivilSeconds seconds_from_civil(const CivilDateTime& c);

inline int hour_of_day(CivilSeconds t) { return static_cast<int>((t / 3600) % 24); }
inline std::int64_t civil_day(CivilSeconds t) { return t / 86400; }

// Parses a timestamp against a strptime-like format supporting
// %Y %m %d %H %M %S and literal bytes. A trailing fractional-seconds part
// (".123") and trailing spaces in the input are tolerated and ignored.
std::optional<CivilSeconds> parse_timestamp(std::string_view text, std::string_view format);

// "YYYY-MM" -> [first second of month, first second of next month)
struct MonthWindow {
  CivilSeconds start = 0;
  CivilSeconds end = 0;
  int days() const { return static_cast<int>((end - start) / 86400); }
};
std::optional<MonthWindow> parse_month_window(std::string_view year_month);

struct BoundingBox {
  double min_lon = -180.0;
  double min_lat = -90.0;
  double max_lon = 180.0;
  double max_lat = 90.0;
  bool contains(double lon, double lat) const {
    return lon >= min_lon && lon <= max_lon && lat >= min_lat && lat <= max_lat;
  }
};

struct RawTrip {
  bool member = false;
  CivilSeconds start_time = 0;
  CivilSeconds end_time = 0;
  std::string start_station_id;
  std::string end_station_id;
  double start_lat = 0.0;
  double start_lon = 0.0;
  double end_lat = 0.0;
  double end_lon = 0.0;
};

struct TripRecord : RawTrip {
  std::int64_t duration_s = 0;       // end - start
  double euclidean_distance_m = 0.0; // on the projected plane
  double speed_m_per_min = 0.0;
};

}  // namespace equity
