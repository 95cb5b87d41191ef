#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "equity/types.hpp"

namespace equity::avail {

// +1 arrival (trip end), -1 departure (trip start).
struct StationEvent {
  CivilSeconds time = 0;
  int delta = 0;
};

enum class ClampMode {
  clamp,  // running counter clamped into [0, capacity] at each event
  zero,   // counter runs free; out-of-range (day, hour) means are zeroed
};

struct ReconstructOptions {
  MonthWindow window;
  double initial_fill = 0.5;  // initial level = floor(capacity * initial_fill)
  ClampMode clamp_mode = ClampMode::clamp;
};

struct StationSeries {
  std::string station_id;
  int capacity = 0;
  std::array<double, 24> hourly_available{};  // month mean per hour of day
};

// Replays the event stream into a step function over the month window,
// time-weights each (day, hour) cell, then averages cells across days.
// Events must arrive sorted ascending by time; same-second arrivals sort
// before departures upstream. Events outside the window are ignored.
// An empty stream yields a flat series at the initial level.
StationSeries reconstruct_station(const std::string& station_id,
                                  const std::vector<StationEvent>& events, int capacity,
                                  const ReconstructOptions& opts);

// Minimal dock count consistent with the events: the range of the unclamped
// counter path seeded at 0 (including the seed). Used only when no capacity
// table is supplied.
int estimate_capacity(const std::vector<StationEvent>& events);

struct ZoneAvailability {
  std::string zone_id;
  bool served = false;  // false when no joined station or total capacity 0
  double capacity = 0.0;
  std::array<double, 24> available{};  // A per hour
  std::array<double, 24> zeta{};       // A / C, in [0, 1]
};

// Sums joined station series into per-zone A and C and takes the ratio.
// join[i] lists indices into `stations` for zone i.
std::vector<ZoneAvailability> zone_zeta(const std::vector<std::string>& zone_ids,
                                        const std::vector<std::vector<int>>& join,
                                        const std::vector<StationSeries>& stations);

// Reversed percentile rank: z(v) = |{u : u >= v}| / N, ties share the value,
// range (0, 1]. Higher z flags lower availability. Errors on empty input.
std::vector<double> reversed_rank(const std::vector<double>& values);

struct SurplusSeries {
  std::string area_id;
  std::array<std::int64_t, 24> supply{};  // arrivals per hour of day, month total
  std::array<std::int64_t, 24> demand{};  // departures
  std::int64_t surplus(int hour) const { return supply[hour] - demand[hour]; }
};

struct SurplusResult {
  std::vector<SurplusSeries> areas;  // sorted by area_id
  std::uint64_t unmapped_stations = 0;
};

SurplusResult surplus(const std::vector<TripRecord>& trips,
                      const std::map<std::string, std::string>& station_to_area);

// Builds per-station sorted event streams from cleaned trips. Arrivals order
// before departures within the same second so a dock swap never dips the
// counter spuriously.
std::map<std::string, std::vector<StationEvent>> station_events(
    const std::vector<TripRecord>& trips);

// Optional dock-capacity override: delimited text with station_id and
// capacity columns. Stations absent from the table fall back to the
// event-range estimate.
std::map<std::string, int> load_capacity_table(const std::string& path);

}  // namespace equity::avail
