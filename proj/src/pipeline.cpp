#include "equity/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "equity/csv.hpp"
#include "equity/parallel.hpp"
#include "equity/version.hpp"

namespace equity::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const json& require_key(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("run config: missing \"" + std::string(key) + "\" in " + ctx);
  }
  return *it;
}

std::string req_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_key(j, key, ctx);
  if (!v.is_string()) {
    throw ConfigError("run config: \"" + std::string(key) + "\" in " + ctx + " must be a string");
  }
  return v.get<std::string>();
}

double req_number(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_key(j, key, ctx);
  if (!v.is_number()) {
    throw ConfigError("run config: \"" + std::string(key) + "\" in " + ctx + " must be a number");
  }
  return v.get<double>();
}

// Input paths resolve against the config file's directory; the output
// directory resolves against the working directory so reruns can redirect
// artifacts without touching the config.
std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute()) return path.lexically_normal().string();
  return (base / path).lexically_normal().string();
}

void check_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw ConfigError("run config: " + what + " does not exist: " + path);
  }
}

PeriodInput parse_period(const json& j, const std::string& name, const fs::path& base) {
  PeriodInput p;
  p.name = name;
  p.trips_path = resolve(base, req_string(j, "trips", "periods." + name));
  p.column_map_path = resolve(base, req_string(j, "column_map", "periods." + name));
  const std::string month = req_string(j, "month", "periods." + name);
  const auto window = parse_month_window(month);
  if (!window) {
    throw ConfigError("run config: periods." + name + ".month must be YYYY-MM, got \"" + month +
                      "\"");
  }
  p.window = *window;
  return p;
}

std::string layer_slug(const layer::MetricLayer& l) {
  std::string out = l.name;
  if (!l.period.empty()) out += "_" + l.period;
  if (!l.category.empty()) out += "_" + l.category;
  return out;
}

std::string format_threshold_column(double l) { return "r_" + csv::format_value(l); }

bool higher_is_better_for(const std::string& layer_name) {
  // zeta measures availability: up is good. Everything else in the stack
  // measures disparity, insufficiency, or time spent degraded: up is bad.
  return layer_name == "zeta";
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open run config: " + path);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("run config is not valid JSON: " + path + ": " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();

  RunConfig cfg;
  cfg.output_dir = req_string(j, "output_dir", "top level");
  if (cfg.output_dir.empty()) {
    throw ConfigError("run config: output_dir must not be empty");
  }

  const json& bbox = require_key(j, "bounding_box", "top level");
  cfg.bbox.min_lon = req_number(bbox, "min_lon", "bounding_box");
  cfg.bbox.min_lat = req_number(bbox, "min_lat", "bounding_box");
  cfg.bbox.max_lon = req_number(bbox, "max_lon", "bounding_box");
  cfg.bbox.max_lat = req_number(bbox, "max_lat", "bounding_box");
  if (cfg.bbox.min_lon >= cfg.bbox.max_lon || cfg.bbox.min_lat >= cfg.bbox.max_lat) {
    throw ConfigError("run config: bounding_box is degenerate");
  }

  const json& periods = require_key(j, "periods", "top level");
  cfg.before = parse_period(require_key(periods, "before", "periods"), "before", base);
  cfg.after = parse_period(require_key(periods, "after", "periods"), "after", base);

  const json& zones = require_key(j, "zones", "top level");
  cfg.zones_path = resolve(base, req_string(zones, "path", "zones"));
  cfg.zone_id_property = req_string(zones, "id_property", "zones");
  cfg.zone_parent_property = req_string(zones, "parent_property", "zones");

  const json& activity = require_key(j, "activity", "top level");
  cfg.activity_path = resolve(base, req_string(activity, "path", "activity"));
  cfg.activity_tag_property = req_string(activity, "tag_property", "activity");

  const json& pop = require_key(j, "population", "top level");
  cfg.persons_path = resolve(base, req_string(pop, "persons", "population"));
  cfg.households_path = resolve(base, req_string(pop, "households", "population"));

  cfg.poverty_path = resolve(base, req_string(j, "poverty_table", "top level"));
  if (j.contains("capacity_table")) {
    cfg.capacity_path = resolve(base, req_string(j, "capacity_table", "top level"));
  }

  Parameters& p = cfg.params;
  if (j.contains("parameters")) {
    const json& pj = j.at("parameters");
    const auto num = [&](const char* key, double fallback) {
      return pj.contains(key) ? req_number(pj, key, "parameters") : fallback;
    };
    const auto flag = [&](const char* key, bool fallback) {
      if (!pj.contains(key)) return fallback;
      const json& v = pj.at(key);
      if (!v.is_boolean()) {
        throw ConfigError(std::string("run config: parameters.") + key + " must be a boolean");
      }
      return v.get<bool>();
    };
    p.service_radius_m = num("service_radius_m", p.service_radius_m);
    p.reach_radius_m = num("reach_radius_m", p.reach_radius_m);
    p.thresholds.lo = num("threshold_lo", p.thresholds.lo);
    p.thresholds.hi = num("threshold_hi", p.thresholds.hi);
    p.thresholds.step = num("threshold_step", p.thresholds.step);
    p.overlay_percentile = num("overlay_percentile", p.overlay_percentile);
    p.initial_fill = num("initial_fill", p.initial_fill);
    p.strict_paper = flag("strict_paper", p.strict_paper);
    p.longest_run_recovery = flag("longest_run_recovery", p.longest_run_recovery);
    p.joint_hour_normalization = flag("joint_hour_normalization", p.joint_hour_normalization);
    p.cluster_k = static_cast<int>(num("cluster_k", p.cluster_k));
    p.cluster_seed = static_cast<std::uint64_t>(num("cluster_seed", 1.0));
    p.threads = static_cast<int>(num("threads", 0.0));
  }

  if (!(p.service_radius_m > 0.0) || !(p.reach_radius_m > 0.0)) {
    throw ConfigError("run config: buffer radii must be positive");
  }
  p.thresholds.levels();  // validates the grid
  if (!(p.overlay_percentile > 0.0) || !(p.overlay_percentile < 1.0)) {
    throw ConfigError("run config: overlay_percentile must lie in (0, 1)");
  }
  if (p.initial_fill < 0.0 || p.initial_fill > 1.0) {
    throw ConfigError("run config: initial_fill must lie in [0, 1]");
  }
  if (p.cluster_k < 1) {
    throw ConfigError("run config: cluster_k must be at least 1");
  }

  check_exists(cfg.before.trips_path, "before trips file");
  check_exists(cfg.after.trips_path, "after trips file");
  check_exists(cfg.before.column_map_path, "before column map");
  check_exists(cfg.after.column_map_path, "after column map");
  check_exists(cfg.zones_path, "zones file");
  check_exists(cfg.activity_path, "activity zones file");
  check_exists(cfg.persons_path, "persons file");
  check_exists(cfg.households_path, "households file");
  check_exists(cfg.poverty_path, "poverty table");
  if (!cfg.capacity_path.empty()) {
    check_exists(cfg.capacity_path, "capacity table");
  }
  return cfg;
}

struct Engine::Cache {
  std::optional<std::vector<ingest::ZoneGeometry>> zones;
  std::map<std::string, std::size_t> zone_index;
  std::optional<geom::Projection> projection;
  std::vector<geom::PolySet> zone_polys;
  std::vector<geom::PolySet> service_buffers;  // params.service_radius_m
  std::optional<ingest::ActivityZoneSet> activity;
  geom::PolySet activity_commute;
  geom::PolySet activity_recreational;
  std::optional<ingest::PopulationTable> population;
  bool capacity_loaded = false;
  std::map<std::string, int> capacity_table;

  std::map<std::string, PeriodData> periods;
  std::optional<std::vector<std::string>> analyzable;
  std::set<std::string> never_served;
  std::optional<std::pair<CategoryAccess, CategoryAccess>> access;  // commute, recreational
  std::map<std::string, MetricsData> metrics;
  std::map<std::string, RecoveryData> recovery;
  std::optional<OverlayData> overlay;
  std::map<std::string, ComparisonData> comparisons;
  std::map<std::string, ClusterData> clusters;
};

Engine::Engine(RunConfig cfg) : cfg_(std::move(cfg)), cache_(std::make_unique<Cache>()) {}

Engine::~Engine() = default;

const PeriodInput& Engine::period_input(const std::string& name) const {
  if (name == "before") return cfg_.before;
  if (name == "after") return cfg_.after;
  throw ConfigError("unknown period \"" + name + "\" (expected before or after)");
}

const std::vector<ingest::ZoneGeometry>& Engine::zones() {
  Cache& c = *cache_;
  if (!c.zones) {
    c.zones = ingest::load_zones(cfg_.zones_path, cfg_.zone_id_property, cfg_.zone_parent_property);
    const double ref_lat = 0.5 * (cfg_.bbox.min_lat + cfg_.bbox.max_lat);
    const double ref_lon = 0.5 * (cfg_.bbox.min_lon + cfg_.bbox.max_lon);
    c.projection.emplace(ref_lat, ref_lon, cfg_.bbox);
    c.zone_polys.reserve(c.zones->size());
    c.service_buffers.reserve(c.zones->size());
    for (std::size_t i = 0; i < c.zones->size(); ++i) {
      const auto& z = (*c.zones)[i];
      c.zone_index[z.zone_id] = i;
      c.zone_polys.push_back(c.projection->project_rings(z.rings));
      c.service_buffers.push_back(geom::buffer(c.zone_polys.back(), cfg_.params.service_radius_m));
    }
  }
  return *c.zones;
}

const ingest::ActivityZoneSet& Engine::activity() {
  Cache& c = *cache_;
  if (!c.activity) {
    zones();  // projection
    c.activity = ingest::load_activity_zones(cfg_.activity_path, cfg_.activity_tag_property,
                                             ingest::default_activity_tag_map());
    for (const auto& rings : c.activity->commute) {
      geom::PolySet p = c.projection->project_rings(rings);
      c.activity_commute.insert(c.activity_commute.end(), p.begin(), p.end());
    }
    for (const auto& rings : c.activity->recreational) {
      geom::PolySet p = c.projection->project_rings(rings);
      c.activity_recreational.insert(c.activity_recreational.end(), p.begin(), p.end());
    }
  }
  return *c.activity;
}

const ingest::PopulationTable& Engine::population() {
  Cache& c = *cache_;
  if (!c.population) {
    c.population = ingest::load_population_files(cfg_.persons_path, cfg_.households_path);
  }
  return *c.population;
}

const PeriodData& Engine::period(const std::string& name) {
  Cache& c = *cache_;
  auto it = c.periods.find(name);
  if (it != c.periods.end()) return it->second;

  const PeriodInput& input = period_input(name);
  const auto& zone_list = zones();

  PeriodData pd;
  {
    ingest::ColumnMap map = ingest::load_column_map_file(input.column_map_path);
    std::ifstream in(input.trips_path, std::ios::binary);
    if (!in) {
      throw InputError("cannot open trips file: " + input.trips_path);
    }
    std::vector<RawTrip> raw = ingest::parse_trips(in, map, cfg_.bbox, pd.parse_tally);
    pd.trips = ingest::clean_trips(raw, *c.projection, pd.filter_tally);
  }

  // Station registry: the first coordinates seen for an id win, scanning
  // trips in file order (start endpoint before end endpoint).
  std::map<std::string, geom::LonLat> coords;
  for (const TripRecord& t : pd.trips) {
    coords.emplace(t.start_station_id, geom::LonLat{t.start_lon, t.start_lat});
    coords.emplace(t.end_station_id, geom::LonLat{t.end_lon, t.end_lat});
  }
  auto events = avail::station_events(pd.trips);

  if (!c.capacity_loaded) {
    if (!cfg_.capacity_path.empty()) {
      c.capacity_table = avail::load_capacity_table(cfg_.capacity_path);
    }
    c.capacity_loaded = true;
  }

  pd.stations.reserve(coords.size());
  for (const auto& [id, ll] : coords) {
    StationInfo s;
    s.station_id = id;
    s.lonlat = ll;
    s.point = c.projection->project(ll.lon, ll.lat);
    const auto cap_it = c.capacity_table.find(id);
    s.capacity =
        cap_it != c.capacity_table.end() ? cap_it->second : avail::estimate_capacity(events.at(id));
    pd.stations.push_back(std::move(s));
  }

  avail::ReconstructOptions opts;
  opts.window = input.window;
  opts.initial_fill = cfg_.params.initial_fill;
  opts.clamp_mode = cfg_.params.strict_paper ? avail::ClampMode::zero : avail::ClampMode::clamp;
  pd.series.resize(pd.stations.size());
  parallel_for(
      pd.stations.size(),
      [&](std::size_t i) {
        const StationInfo& s = pd.stations[i];
        pd.series[i] = avail::reconstruct_station(s.station_id, events.at(s.station_id),
                                                  s.capacity, opts);
      },
      cfg_.params.threads);

  std::vector<geom::PlanarPoint> points;
  points.reserve(pd.stations.size());
  for (const auto& s : pd.stations) points.push_back(s.point);
  pd.zone_station_join = geom::stations_in_buffers(c.service_buffers, points);

  std::vector<std::string> zone_ids;
  zone_ids.reserve(zone_list.size());
  for (const auto& z : zone_list) zone_ids.push_back(z.zone_id);
  pd.zones = avail::zone_zeta(zone_ids, pd.zone_station_join, pd.series);
  for (const auto& za : pd.zones) {
    if (za.served) pd.served.insert(za.zone_id);
  }

  // Performance rank z per hour across the period's served zones.
  {
    std::vector<const avail::ZoneAvailability*> served;
    for (const std::string& id : pd.served) {
      served.push_back(&pd.zones[c.zone_index.at(id)]);
    }
    if (!served.empty()) {
      for (int h = 0; h < 24; ++h) {
        std::vector<double> zeta_h;
        zeta_h.reserve(served.size());
        for (const auto* za : served) zeta_h.push_back(za->zeta[static_cast<std::size_t>(h)]);
        const std::vector<double> ranks = avail::reversed_rank(zeta_h);
        for (std::size_t i = 0; i < served.size(); ++i) {
          pd.z[served[i]->zone_id][static_cast<std::size_t>(h)] = ranks[i];
        }
      }
    }
  }

  // Supply/demand surplus per parent area; a station's home zone is the
  // first zone (by id) whose polygon covers its point.
  {
    std::vector<std::string> sorted_ids = zone_ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    std::map<std::string, std::string> station_to_area;
    for (const auto& s : pd.stations) {
      for (const std::string& id : sorted_ids) {
        if (geom::covers(c.zone_polys[c.zone_index.at(id)], s.point)) {
          station_to_area[s.station_id] = zone_list[c.zone_index.at(id)].parent_id;
          break;
        }
      }
    }
    pd.surplus = avail::surplus(pd.trips, station_to_area);
  }

  return c.periods.emplace(name, std::move(pd)).first->second;
}

const std::vector<std::string>& Engine::analyzable_zones() {
  Cache& c = *cache_;
  if (!c.analyzable) {
    const PeriodData& before = period("before");
    const PeriodData& after = period("after");
    std::set<std::string> served_any;
    served_any.insert(before.served.begin(), before.served.end());
    served_any.insert(after.served.begin(), after.served.end());
    if (served_any.empty()) {
      throw InputError("no zone is served in either period; nothing to analyze");
    }
    c.analyzable.emplace(served_any.begin(), served_any.end());
    c.never_served.clear();
    for (const auto& z : zones()) {
      if (!served_any.count(z.zone_id)) c.never_served.insert(z.zone_id);
    }
  }
  return *c.analyzable;
}

const std::set<std::string>& Engine::never_served_zones() {
  analyzable_zones();
  return cache_->never_served;
}

namespace {

// One minmax per hour by default; under joint normalization a single minmax
// spans all 24 hours' products.
std::map<std::string, std::array<double, 24>> normalize_hourly_products(
    const std::vector<std::string>& zone_ids, const std::vector<std::array<double, 24>>& products,
    bool joint) {
  std::map<std::string, std::array<double, 24>> out;
  if (zone_ids.empty()) return out;
  for (const auto& id : zone_ids) out[id] = {};
  if (joint) {
    std::vector<double> flat;
    flat.reserve(zone_ids.size() * 24);
    for (int h = 0; h < 24; ++h) {
      for (std::size_t i = 0; i < zone_ids.size(); ++i) {
        flat.push_back(products[i][static_cast<std::size_t>(h)]);
      }
    }
    const std::vector<double> normed = metrics::minmax(flat);
    std::size_t k = 0;
    for (int h = 0; h < 24; ++h) {
      for (std::size_t i = 0; i < zone_ids.size(); ++i) {
        out[zone_ids[i]][static_cast<std::size_t>(h)] = normed[k++];
      }
    }
  } else {
    for (int h = 0; h < 24; ++h) {
      std::vector<double> col;
      col.reserve(zone_ids.size());
      for (std::size_t i = 0; i < zone_ids.size(); ++i) {
        col.push_back(products[i][static_cast<std::size_t>(h)]);
      }
      const std::vector<double> normed = metrics::minmax(col);
      for (std::size_t i = 0; i < zone_ids.size(); ++i) {
        out[zone_ids[i]][static_cast<std::size_t>(h)] = normed[i];
      }
    }
  }
  return out;
}

}  // namespace

const MetricsData& Engine::metrics_data(const std::string& name) {
  Cache& c = *cache_;
  auto it = c.metrics.find(name);
  if (it != c.metrics.end()) return it->second;

  const PeriodData& pd = period(name);
  const auto& zone_list = zones();
  const auto& pop = population();
  const std::vector<std::string>& universe = analyzable_zones();

  // Category access frames are period-independent; computed once.
  if (!c.access) {
    activity();
    CategoryAccess commute, recreational;
    for (const std::string& id : universe) {
      const std::size_t zi = c.zone_index.at(id);
      metrics::AccessZone az;
      az.zone_id = id;
      az.parent_id = zone_list[zi].parent_id;
      const auto pop_it = pop.zone_counts.find(id);
      az.population = pop_it == pop.zone_counts.end() ? 0.0 : static_cast<double>(pop_it->second);
      commute.frame.push_back(az);
      recreational.frame.push_back(az);
    }
    std::vector<geom::PolySet> reach(universe.size());
    parallel_for(
        universe.size(),
        [&](std::size_t i) {
          reach[i] =
              geom::buffer(c.zone_polys[c.zone_index.at(universe[i])], cfg_.params.reach_radius_m);
        },
        cfg_.params.threads);
    for (std::size_t i = 0; i < universe.size(); ++i) {
      commute.frame[i].reach_area = geom::intersection_area(reach[i], c.activity_commute);
      recreational.frame[i].reach_area =
          geom::intersection_area(reach[i], c.activity_recreational);
    }
    commute.scores = metrics::i_access(commute.frame);
    recreational.scores = metrics::i_access(recreational.frame);
    c.access.emplace(std::move(commute), std::move(recreational));
  }

  MetricsData md;
  md.commute = c.access->first;
  md.recreational = c.access->second;

  const std::vector<std::string> served_sorted(pd.served.begin(), pd.served.end());
  if (!served_sorted.empty()) {
    // D_sp: population-rank-weighted z, normalized across served zones.
    std::vector<double> n;
    n.reserve(served_sorted.size());
    for (const auto& id : served_sorted) {
      const auto pop_it = pop.zone_counts.find(id);
      n.push_back(pop_it == pop.zone_counts.end() ? 0.0 : static_cast<double>(pop_it->second));
    }
    const std::vector<double> eta_n = metrics::percentile_rank(n);
    std::vector<std::array<double, 24>> products(served_sorted.size());
    for (std::size_t i = 0; i < served_sorted.size(); ++i) {
      const auto& zrow = pd.z.at(served_sorted[i]);
      for (int h = 0; h < 24; ++h) {
        products[i][static_cast<std::size_t>(h)] = zrow[static_cast<std::size_t>(h)] * eta_n[i];
      }
    }
    md.d_sp = normalize_hourly_products(served_sorted, products,
                                        cfg_.params.joint_hour_normalization);

    // ZI_access: z weighted by the rank of the logged insufficiency, per
    // category, over the same served zones.
    const auto zi_for = [&](const CategoryAccess& cat) {
      std::map<std::string, double> logged_by_zone;
      for (std::size_t i = 0; i < cat.frame.size(); ++i) {
        logged_by_zone[cat.frame[i].zone_id] = cat.scores[i].insufficiency_log;
      }
      std::vector<double> logged;
      logged.reserve(served_sorted.size());
      for (const auto& id : served_sorted) logged.push_back(logged_by_zone.at(id));
      const std::vector<double> eta_ins = metrics::percentile_rank(logged);
      std::vector<std::array<double, 24>> prod(served_sorted.size());
      for (std::size_t i = 0; i < served_sorted.size(); ++i) {
        const auto& zrow = pd.z.at(served_sorted[i]);
        for (int h = 0; h < 24; ++h) {
          prod[i][static_cast<std::size_t>(h)] = zrow[static_cast<std::size_t>(h)] * eta_ins[i];
        }
      }
      return normalize_hourly_products(served_sorted, prod, cfg_.params.joint_hour_normalization);
    };
    md.zi_commute = zi_for(md.commute);
    md.zi_recreational = zi_for(md.recreational);
  }

  // Zones outside this period's service carry the fixed disparity of 1.
  for (const std::string& id : universe) {
    if (!pd.served.count(id)) {
      md.d_sp[id].fill(1.0);
    }
  }

  return c.metrics.emplace(name, std::move(md)).first->second;
}

const RecoveryData& Engine::recovery_data(const std::string& name) {
  Cache& c = *cache_;
  auto it = c.recovery.find(name);
  if (it != c.recovery.end()) return it->second;

  const PeriodData& pd = period(name);
  RecoveryData rd;
  const auto kind = cfg_.params.longest_run_recovery ? recovery::RecoveryKind::longest_run
                                                     : recovery::RecoveryKind::total_hours;
  const auto rule = cfg_.params.strict_paper ? recovery::QuadratureRule::rectangle
                                             : recovery::QuadratureRule::trapezoid;
  for (const std::string& id : pd.served) {
    const auto& za = pd.zones[c.zone_index.at(id)];
    rd.profiles.push_back(
        recovery::profile_zone(id, za.zeta, cfg_.params.thresholds, kind, rule));
  }
  return c.recovery.emplace(name, std::move(rd)).first->second;
}

const OverlayData& Engine::overlay_data() {
  Cache& c = *cache_;
  if (!c.overlay) {
    const auto& pop = population();
    OverlayData od;
    od.poverty = demographics::load_poverty_table(cfg_.poverty_path);
    od.person_flags = demographics::flag_persons(pop, od.poverty);
    od.segments = demographics::segment_population(od.person_flags);
    // Percentages and masks live on the analyzable universe only.
    std::map<std::string, std::int64_t> universe_pop;
    for (const std::string& id : analyzable_zones()) {
      const auto it = pop.zone_counts.find(id);
      universe_pop[id] = it == pop.zone_counts.end() ? 0 : it->second;
    }
    od.overlays =
        demographics::combine_segments(od.segments, universe_pop, cfg_.params.overlay_percentile);
    c.overlay.emplace(std::move(od));
  }
  return *c.overlay;
}

const ComparisonData& Engine::comparison_data(const std::string& name) {
  Cache& c = *cache_;
  auto it = c.comparisons.find(name);
  if (it != c.comparisons.end()) return it->second;

  const PeriodData& pd = period(name);
  const RecoveryData& rd = recovery_data(name);
  const OverlayData& od = overlay_data();

  std::map<std::string, double> sr_by_zone;
  for (const auto& p : rd.profiles) sr_by_zone[p.zone_id] = p.sr;

  const std::vector<std::string> served_sorted(pd.served.begin(), pd.served.end());
  std::vector<double> values;
  values.reserve(served_sorted.size());
  for (const auto& id : served_sorted) values.push_back(sr_by_zone.at(id));

  ComparisonData cd;
  for (const auto& overlay : od.overlays) {
    ComparisonRow row;
    row.combination = overlay.label;
    std::unique_ptr<bool[]> mask(new bool[served_sorted.size()]);
    std::size_t in_count = 0;
    for (std::size_t i = 0; i < served_sorted.size(); ++i) {
      mask[i] = std::binary_search(overlay.masked_zones.begin(), overlay.masked_zones.end(),
                                   served_sorted[i]);
      if (mask[i]) ++in_count;
    }
    if (in_count == 0 || in_count == served_sorted.size()) {
      row.note = "skipped: a group is empty on the served zones";
    } else {
      row.report =
          stats::compare_groups(values, std::span<const bool>(mask.get(), served_sorted.size()),
                                "disadvantaged", "rest");
      row.computed = true;
    }
    cd.rows.push_back(std::move(row));
  }
  return c.comparisons.emplace(name, std::move(cd)).first->second;
}

const ClusterData& Engine::cluster_data(const std::string& name) {
  Cache& c = *cache_;
  auto it = c.clusters.find(name);
  if (it != c.clusters.end()) return it->second;

  const PeriodData& pd = period(name);
  const MetricsData& md = metrics_data(name);
  const OverlayData& od = overlay_data();
  const auto& pop = population();
  const auto& zone_list = zones();

  ClusterData kd;
  kd.zone_ids.assign(pd.served.begin(), pd.served.end());
  kd.feature_names = {"zi_mean",         "population",         "households",
                      "non_white",       "limited_english",    "poverty_households",
                      "no_vehicle_households"};

  // Household-level tallies per zone.
  struct ZoneHouseholds {
    std::set<std::string> all;
    std::set<std::string> poverty;
    std::set<std::string> no_vehicle;
  };
  std::map<std::string, ZoneHouseholds> hh;
  std::map<std::string, double> non_white, limited_english;
  for (std::size_t i = 0; i < pop.persons.size(); ++i) {
    const auto& person = pop.persons[i];
    const auto& flags = od.person_flags[i];
    auto& z = hh[person.zone_id];
    z.all.insert(person.household_id);
    if (flags.flags & demographics::kUnderPoverty) z.poverty.insert(person.household_id);
    if (flags.flags & demographics::kNoVehicle) z.no_vehicle.insert(person.household_id);
    if (flags.flags & demographics::kNonWhite) non_white[person.zone_id] += 1.0;
    if (flags.flags & demographics::kLimitedEnglish) limited_english[person.zone_id] += 1.0;
  }

  std::vector<std::vector<double>> features;
  features.reserve(kd.zone_ids.size());
  for (const auto& id : kd.zone_ids) {
    double zi_mean = 0.0;
    const auto& zc = md.zi_commute.at(id);
    const auto& zr = md.zi_recreational.at(id);
    for (int h = 0; h < 24; ++h) {
      zi_mean += zc[static_cast<std::size_t>(h)] + zr[static_cast<std::size_t>(h)];
    }
    zi_mean /= 48.0;
    const auto pop_it = pop.zone_counts.find(id);
    const auto hh_it = hh.find(id);
    features.push_back({
        zi_mean,
        pop_it == pop.zone_counts.end() ? 0.0 : static_cast<double>(pop_it->second),
        hh_it == hh.end() ? 0.0 : static_cast<double>(hh_it->second.all.size()),
        non_white.count(id) ? non_white.at(id) : 0.0,
        limited_english.count(id) ? limited_english.at(id) : 0.0,
        hh_it == hh.end() ? 0.0 : static_cast<double>(hh_it->second.poverty.size()),
        hh_it == hh.end() ? 0.0 : static_cast<double>(hh_it->second.no_vehicle.size()),
    });
  }

  if (static_cast<std::size_t>(cfg_.params.cluster_k) > kd.zone_ids.size()) {
    throw InputError("cluster_k exceeds the number of served zones in period " + name);
  }
  kd.result = cluster::kmeans(cluster::standardize(features), cfg_.params.cluster_k,
                              cfg_.params.cluster_seed);

  std::map<std::string, int> parent_code;
  std::vector<int> parent_labels;
  parent_labels.reserve(kd.zone_ids.size());
  for (const auto& id : kd.zone_ids) {
    const std::string& parent = zone_list[c.zone_index.at(id)].parent_id;
    parent_labels.push_back(
        parent_code.emplace(parent, static_cast<int>(parent_code.size())).first->second);
  }
  kd.rand_vs_parent = kd.zone_ids.size() >= 2
                          ? cluster::rand_index(kd.result.labels, parent_labels)
                          : 1.0;

  return c.clusters.emplace(name, std::move(kd)).first->second;
}

layer::MetricLayer Engine::build_layer(const std::string& layer_name, const std::string& period_name,
                                       const std::string& category) {
  const PeriodData& pd = period(period_name);
  const std::vector<std::string>& universe = analyzable_zones();
  Cache& c = *cache_;

  layer::MetricLayer l;
  l.name = layer_name;
  l.period = period_name;
  l.category = category;
  l.never_served = never_served_zones();

  const auto mark_unserved = [&] {
    for (const std::string& id : universe) {
      if (!pd.served.count(id)) l.no_service.insert(id);
    }
  };

  const bool wants_category = layer_name == "i_access" || layer_name == "zi_access";
  if (wants_category) {
    if (category != "commute" && category != "recreational") {
      throw ConfigError("layer " + layer_name + " requires category commute or recreational");
    }
  } else if (!category.empty()) {
    throw ConfigError("layer " + layer_name + " does not take a category");
  }

  if (layer_name == "zeta") {
    l.hourly = true;
    mark_unserved();
    for (const std::string& id : universe) {
      if (!pd.served.count(id)) continue;
      const auto& za = pd.zones[c.zone_index.at(id)];
      l.values[id] = std::vector<double>(za.zeta.begin(), za.zeta.end());
    }
  } else if (layer_name == "z") {
    l.hourly = true;
    mark_unserved();
    for (const auto& [id, row] : pd.z) {
      l.values[id] = std::vector<double>(row.begin(), row.end());
    }
  } else if (layer_name == "d_sp") {
    l.hourly = true;
    mark_unserved();
    const MetricsData& md = metrics_data(period_name);
    for (const auto& [id, row] : md.d_sp) {
      l.values[id] = std::vector<double>(row.begin(), row.end());
    }
  } else if (layer_name == "zi_access") {
    l.hourly = true;
    mark_unserved();
    const MetricsData& md = metrics_data(period_name);
    const auto& src = category == "commute" ? md.zi_commute : md.zi_recreational;
    for (const auto& [id, row] : src) {
      l.values[id] = std::vector<double>(row.begin(), row.end());
    }
  } else if (layer_name == "i_access") {
    l.hourly = false;
    mark_unserved();
    const MetricsData& md = metrics_data(period_name);
    const CategoryAccess& src = category == "commute" ? md.commute : md.recreational;
    for (std::size_t i = 0; i < src.frame.size(); ++i) {
      l.values[src.frame[i].zone_id] = {src.scores[i].i_access};
    }
  } else if (layer_name == "sr") {
    l.hourly = false;
    mark_unserved();
    const RecoveryData& rd = recovery_data(period_name);
    for (const auto& p : rd.profiles) {
      l.values[p.zone_id] = {p.sr};
    }
  } else {
    throw ConfigError("unknown layer \"" + layer_name +
                      "\" (expected zeta, z, d_sp, sr, i_access, or zi_access)");
  }
  return l;
}

namespace {

std::ofstream open_artifact(const fs::path& dir, const std::string& rel) {
  fs::create_directories(dir);
  std::ofstream out(dir / rel, std::ios::binary);
  if (!out) {
    throw InternalError("cannot open output file: " + (dir / rel).string());
  }
  return out;
}

}  // namespace

std::vector<std::string> Engine::write_ingest(const std::string& period_name) {
  const PeriodData& pd = period(period_name);
  const std::string rel = "tallies_" + period_name + ".csv";
  std::ofstream out = open_artifact(cfg_.output_dir, rel);
  out << "stage,name,count\n";
  const auto row = [&](const char* stage, const char* key, std::uint64_t v) {
    out << stage << ',' << key << ',' << v << '\n';
  };
  row("parse", "rows_total", pd.parse_tally.rows_total);
  row("parse", "accepted", pd.parse_tally.accepted);
  row("parse", "bad_field_count", pd.parse_tally.bad_field_count);
  row("parse", "bad_timestamp", pd.parse_tally.bad_timestamp);
  row("parse", "missing_station", pd.parse_tally.missing_station);
  row("parse", "bad_coordinate", pd.parse_tally.bad_coordinate);
  row("parse", "out_of_bbox", pd.parse_tally.out_of_bbox);
  row("filter", "input", pd.filter_tally.input);
  row("filter", "accepted", pd.filter_tally.accepted);
  row("filter", "non_member", pd.filter_tally.non_member);
  row("filter", "duration_out_of_range", pd.filter_tally.duration_out_of_range);
  row("filter", "speed_too_high", pd.filter_tally.speed_too_high);
  row("filter", "crosses_midnight", pd.filter_tally.crosses_midnight);
  row("availability", "stations", pd.stations.size());
  row("availability", "unmapped_surplus_stations", pd.surplus.unmapped_stations);
  return {rel};
}

std::vector<std::string> Engine::write_availability(const std::string& period_name) {
  const PeriodData& pd = period(period_name);
  std::vector<std::string> written;
  for (const char* name : {"zeta", "z"}) {
    layer::MetricLayer l = build_layer(name, period_name);
    const std::string base = layer_slug(l);
    layer::export_table(l, (fs::path(cfg_.output_dir) / (base + ".csv")).string());
    layer::export_geojson(l, zones(), (fs::path(cfg_.output_dir) / (base + ".geojson")).string());
    written.push_back(base + ".csv");
    written.push_back(base + ".geojson");
  }
  const std::string rel = "surplus_" + period_name + ".csv";
  std::ofstream out = open_artifact(cfg_.output_dir, rel);
  out << "area_id,hour,supply,demand,surplus\n";
  for (const auto& area : pd.surplus.areas) {
    for (int h = 0; h < 24; ++h) {
      out << csv::quote_field(area.area_id) << ',' << h << ',' << area.supply[h] << ','
          << area.demand[h] << ',' << area.surplus(h) << '\n';
    }
  }
  written.push_back(rel);
  return written;
}

std::vector<std::string> Engine::write_metrics(const std::string& period_name,
                                               const std::string& category_filter) {
  std::vector<std::string> written;
  const auto emit = [&](const std::string& name, const std::string& category) {
    layer::MetricLayer l = build_layer(name, period_name, category);
    const std::string base = layer_slug(l);
    layer::export_table(l, (fs::path(cfg_.output_dir) / (base + ".csv")).string());
    layer::export_geojson(l, zones(), (fs::path(cfg_.output_dir) / (base + ".geojson")).string());
    written.push_back(base + ".csv");
    written.push_back(base + ".geojson");
  };
  fs::create_directories(cfg_.output_dir);
  emit("d_sp", "");
  for (const std::string category : {"commute", "recreational"}) {
    if (!category_filter.empty() && category_filter != category) continue;
    emit("i_access", category);
    emit("zi_access", category);
  }
  return written;
}

std::vector<std::string> Engine::write_recovery(const std::string& period_name) {
  const RecoveryData& rd = recovery_data(period_name);
  std::vector<std::string> written;
  const std::string rel = "recovery_" + period_name + ".csv";
  std::ofstream out = open_artifact(cfg_.output_dir, rel);
  out << "zone_id";
  for (double l : cfg_.params.thresholds.levels()) out << ',' << format_threshold_column(l);
  out << ",sr,band\n";
  for (const auto& p : rd.profiles) {
    out << csv::quote_field(p.zone_id);
    for (int r : p.hours_below) out << ',' << r;
    out << ',' << csv::format_value(p.sr) << ',' << p.sr_category << '\n';
  }
  written.push_back(rel);

  layer::MetricLayer l = build_layer("sr", period_name);
  const std::string base = layer_slug(l);
  layer::export_table(l, (fs::path(cfg_.output_dir) / (base + ".csv")).string());
  layer::export_geojson(l, zones(), (fs::path(cfg_.output_dir) / (base + ".geojson")).string());
  written.push_back(base + ".csv");
  written.push_back(base + ".geojson");
  return written;
}

std::vector<std::string> Engine::write_overlay() {
  const OverlayData& od = overlay_data();
  const std::string rel = "overlays.csv";
  std::ofstream out = open_artifact(cfg_.output_dir, rel);
  out << "combination,zone_id,count,percentage,cutoff,masked\n";
  for (std::size_t s = 0; s < od.overlays.size(); ++s) {
    const auto& ov = od.overlays[s];
    const auto& seg = od.segments[s];
    for (const auto& [zone, pct] : ov.zone_percentage) {
      const auto count_it = seg.zone_counts.find(zone);
      const std::int64_t count = count_it == seg.zone_counts.end() ? 0 : count_it->second;
      const bool masked =
          std::binary_search(ov.masked_zones.begin(), ov.masked_zones.end(), zone);
      out << csv::quote_field(ov.label) << ',' << csv::quote_field(zone) << ',' << count << ','
          << csv::format_value(pct) << ',' << csv::format_value(ov.cutoff) << ','
          << (masked ? "true" : "false") << '\n';
    }
  }
  return {rel};
}

std::vector<std::string> Engine::write_compare(const std::string& period_name) {
  const ComparisonData& cd = comparison_data(period_name);
  const std::string rel = "comparisons_" + period_name + ".csv";
  std::ofstream out = open_artifact(cfg_.output_dir, rel);
  out << "combination,n_disadvantaged,mean_disadvantaged,n_rest,mean_rest,"
         "t_stat,t_p,t_dof,ks_d,ks_p,ks_exact,note\n";
  for (const auto& row : cd.rows) {
    out << csv::quote_field(row.combination) << ',';
    if (row.computed) {
      const auto& r = row.report;
      out << r.group_a.n << ',' << csv::format_value(r.group_a.mean) << ',' << r.group_b.n << ','
          << csv::format_value(r.group_b.mean) << ',';
      if (r.t_test) {
        out << csv::format_value(r.t_test->statistic) << ',' << csv::format_value(r.t_test->p_value)
            << ',' << csv::format_value(r.t_test->dof) << ',';
      } else {
        out << ",,,";
      }
      out << csv::format_value(r.ks.statistic) << ',' << csv::format_value(r.ks.p_value) << ','
          << (r.ks.exact ? "true" : "false") << ',' << csv::quote_field(r.t_test_note) << '\n';
    } else {
      out << ",,,,,,,,,," << csv::quote_field(row.note) << '\n';
    }
  }
  return {rel};
}

std::vector<std::string> Engine::write_cluster(const std::string& period_name) {
  const ClusterData& kd = cluster_data(period_name);
  std::vector<std::string> written;
  {
    const std::string rel = "clusters_" + period_name + ".csv";
    std::ofstream out = open_artifact(cfg_.output_dir, rel);
    out << "zone_id,label\n";
    for (std::size_t i = 0; i < kd.zone_ids.size(); ++i) {
      out << csv::quote_field(kd.zone_ids[i]) << ',' << kd.result.labels[i] << '\n';
    }
    written.push_back(rel);
  }
  {
    const std::string rel = "cluster_summary_" + period_name + ".csv";
    std::ofstream out = open_artifact(cfg_.output_dir, rel);
    out << "k,seed,inertia,iterations,rand_index_vs_parent\n";
    out << cfg_.params.cluster_k << ',' << cfg_.params.cluster_seed << ','
        << csv::format_value(kd.result.inertia) << ',' << kd.result.iterations << ','
        << csv::format_value(kd.rand_vs_parent) << '\n';
    written.push_back(rel);
  }
  return written;
}

std::vector<std::string> Engine::write_diff(const std::string& layer_name,
                                            const std::string& category, int hour) {
  layer::MetricLayer before = build_layer(layer_name, "before", category);
  layer::MetricLayer after = build_layer(layer_name, "after", category);
  const layer::DiffTable diff =
      layer::diff_periods(before, after, higher_is_better_for(layer_name),
                          before.hourly ? hour : -1);
  std::string rel = "diff_" + layer_name;
  if (!category.empty()) rel += "_" + category;
  if (before.hourly && hour >= 0) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_h%02d", hour);
    rel += suffix;
  }
  rel += ".csv";
  fs::create_directories(cfg_.output_dir);
  layer::export_diff(diff, (fs::path(cfg_.output_dir) / rel).string());
  return {rel};
}

std::vector<std::string> Engine::run_all() {
  std::vector<std::string> written;
  const auto add = [&](std::vector<std::string> more) {
    written.insert(written.end(), more.begin(), more.end());
  };
  try {
    for (const char* p : {"before", "after"}) {
      add(write_ingest(p));
      add(write_availability(p));
      add(write_metrics(p));
      add(write_recovery(p));
      add(write_compare(p));
      add(write_cluster(p));
    }
    add(write_overlay());
    layer::write_manifest(cfg_.output_dir, written, kVersion);
    written.push_back("manifest.json");
  } catch (...) {
    std::error_code ec;
    for (const std::string& rel : written) {
      fs::remove(fs::path(cfg_.output_dir) / rel, ec);
    }
    fs::remove(fs::path(cfg_.output_dir) / "manifest.json", ec);
    throw;
  }
  return written;
}

}  // namespace equity::pipeline
