#include "equity/availability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "equity/csv.hpp"

namespace equity::avail {

namespace {

int clamp_level(int level, int capacity) { return std::clamp(level, 0, capacity); }

}  // namespace

int estimate_capacity(const std::vector<StationEvent>& events) {
  int level = 0, lo = 0, hi = 0;
  for (const StationEvent& e : events) {
    level += e.delta;
    lo = std::min(lo, level);
    hi = std::max(hi, level);
  }
  return hi - lo;
}

StationSeries reconstruct_station(const std::string& station_id,
                                  const std::vector<StationEvent>& events, int capacity,
                                  const ReconstructOptions& opts) {
  const CivilSeconds w0 = opts.window.start;
  const CivilSeconds w1 = opts.window.end;
  if (w1 <= w0 || (w1 - w0) % 86400 != 0 || w0 % 86400 != 0) {
    throw InternalError("reconstruction window must cover whole days starting at midnight");
  }
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].time < events[i - 1].time) {
      throw InternalError("station events must be sorted ascending by time");
    }
  }
  const int days = static_cast<int>((w1 - w0) / 86400);
  const bool clamped = opts.clamp_mode == ClampMode::clamp;

  int level = static_cast<int>(std::floor(capacity * opts.initial_fill));
  if (clamped) level = clamp_level(level, capacity);

  // integral of the counter over each (day, hour) cell, in level-seconds
  std::vector<double> cell(static_cast<std::size_t>(days) * 24, 0.0);
  auto accumulate = [&](CivilSeconds from, CivilSeconds to, int value) {
    CivilSeconds t = from;
    while (t < to) {
      const CivilSeconds hour_end = (t / 3600 + 1) * 3600;
      const CivilSeconds seg_end = std::min(to, hour_end);
      const std::size_t idx = static_cast<std::size_t>((t - w0) / 3600);
      cell[idx] += static_cast<double>(value) * static_cast<double>(seg_end - t);
      t = seg_end;
    }
  };

  CivilSeconds cursor = w0;
  for (const StationEvent& e : events) {
    if (e.time < w0 || e.time >= w1) continue;
    accumulate(cursor, e.time, level);
    cursor = e.time;
    level += e.delta;
    if (clamped) level = clamp_level(level, capacity);
  }
  accumulate(cursor, w1, level);

  StationSeries series;
  series.station_id = station_id;
  series.capacity = capacity;
  for (int h = 0; h < 24; ++h) {
    double sum = 0.0;
    for (int d = 0; d < days; ++d) {
      double mean = cell[static_cast<std::size_t>(d) * 24 + h] / 3600.0;
      if (!clamped && (mean < 0.0 || mean > capacity)) mean = 0.0;
      sum += mean;
    }
    series.hourly_available[h] = sum / days;
  }
  return series;
}

std::vector<ZoneAvailability> zone_zeta(const std::vector<std::string>& zone_ids,
                                        const std::vector<std::vector<int>>& join,
                                        const std::vector<StationSeries>& stations) {
  if (zone_ids.size() != join.size()) {
    throw InternalError("zone_zeta: join table does not match zone list");
  }
  std::vector<ZoneAvailability> out(zone_ids.size());
  for (std::size_t i = 0; i < zone_ids.size(); ++i) {
    ZoneAvailability& za = out[i];
    za.zone_id = zone_ids[i];
    for (int s : join[i]) {
      const StationSeries& st = stations[static_cast<std::size_t>(s)];
      za.capacity += st.capacity;
      for (int h = 0; h < 24; ++h) za.available[h] += st.hourly_available[h];
    }
    za.served = za.capacity > 0.0;
    if (za.served) {
      for (int h = 0; h < 24; ++h) {
        za.zeta[h] = std::clamp(za.available[h] / za.capacity, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<double> reversed_rank(const std::vector<double>& values) {
  if (values.empty()) throw InputError("reversed_rank: empty input");
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(values.size());
  std::vector<double> z(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    // count of u >= v
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), values[i]);
    z[i] = static_cast<double>(sorted.end() - it) / n;
  }
  return z;
}

SurplusResult surplus(const std::vector<TripRecord>& trips,
                      const std::map<std::string, std::string>& station_to_area) {
  std::map<std::string, SurplusSeries> by_area;
  SurplusResult result;
  auto record = [&](const std::string& station, CivilSeconds t, bool arrival) {
    auto it = station_to_area.find(station);
    if (it == station_to_area.end()) {
      ++result.unmapped_stations;
      return;
    }
    SurplusSeries& s = by_area[it->second];
    s.area_id = it->second;
    const int h = hour_of_day(t);
    if (arrival) s.supply[h] += 1;
    else s.demand[h] += 1;
  };
  for (const TripRecord& t : trips) {
    record(t.start_station_id, t.start_time, false);
    record(t.end_station_id, t.end_time, true);
  }
  result.areas.reserve(by_area.size());
  for (auto& [id, series] : by_area) result.areas.push_back(std::move(series));
  return result;
}

std::map<std::string, std::vector<StationEvent>> station_events(
    const std::vector<TripRecord>& trips) {
  std::map<std::string, std::vector<StationEvent>> events;
  for (const TripRecord& t : trips) {
    events[t.start_station_id].push_back({t.start_time, -1});
    events[t.end_station_id].push_back({t.end_time, +1});
  }
  for (auto& [id, list] : events) {
    std::sort(list.begin(), list.end(), [](const StationEvent& a, const StationEvent& b) {
      if (a.time != b.time) return a.time < b.time;
      return a.delta > b.delta;  // arrivals first within a second
    });
  }
  return events;
}

std::map<std::string, int> load_capacity_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open capacity table: " + path);
  }
  csv::Reader reader(in, ',');
  const int c_id = reader.column("station_id");
  const int c_cap = reader.column("capacity");
  if (c_id < 0 || c_cap < 0) {
    throw ConfigError("capacity table must have station_id and capacity columns: " + path);
  }
  std::map<std::string, int> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::string& id = fields[static_cast<std::size_t>(c_id)];
    int cap = 0;
    try {
      cap = std::stoi(fields[static_cast<std::size_t>(c_cap)]);
    } catch (const std::exception&) {
      throw InputError("capacity table row " + std::to_string(reader.rows_read()) +
                       " is not numeric: " + path);
    }
    if (cap < 0) {
      throw InputError("capacity table lists a negative capacity for station " + id);
    }
    if (!out.emplace(id, cap).second) {
      throw InputError("capacity table lists station " + id + " twice");
    }
  }
  return out;
}

}  // namespace equity::avail
