#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "equity/availability.hpp"
#include "equity/cluster.hpp"
#include "equity/demographics.hpp"
#include "equity/geometry.hpp"
#include "equity/ingest.hpp"
#include "equity/layers.hpp"
#include "equity/metrics.hpp"
#include "equity/recovery.hpp"
#include "equity/stats.hpp"

namespace equity::pipeline {

struct PeriodInput {
  std::string name;  // "before" or "after"
  std::string trips_path;
  std::string column_map_path;
  MonthWindow window;
};

struct Parameters {
  double service_radius_m = 500.0;  // station-to-zone join buffer
  double reach_radius_m = 2600.0;   // activity reachability buffer
  recovery::ThresholdGrid thresholds{};
  double overlay_percentile = 0.75;
  double initial_fill = 0.5;
  bool strict_paper = false;             // zero out-of-range availability, rectangle-rule SR
  bool longest_run_recovery = false;     // longest consecutive run instead of total hours
  bool joint_hour_normalization = false; // one minmax across all 24 hours instead of per hour
  int cluster_k = 3;
  std::uint64_t cluster_seed = 1;
  int threads = 0;  // 0: EQUITY_THREADS, then hardware
};

struct RunConfig {
  std::string output_dir;
  BoundingBox bbox;
  PeriodInput before;
  PeriodInput after;
  std::string zones_path;
  std::string zone_id_property;
  std::string zone_parent_property;
  std::string activity_path;
  std::string activity_tag_property;
  std::string persons_path;
  std::string households_path;
  std::string poverty_path;
  std::string capacity_path;  // empty: capacities estimated from event ranges
  Parameters params;
};

// Parses and validates the JSON run configuration; every referenced input
// must exist at load time.
RunConfig load_run_config(const std::string& path);

struct StationInfo {
  std::string station_id;
  geom::LonLat lonlat;    // first coordinates seen for the station
  geom::PlanarPoint point;
  int capacity = 0;
};

struct PeriodData {
  ingest::ParseTally parse_tally;
  ingest::FilterTally filter_tally;
  std::vector<TripRecord> trips;
  std::vector<StationInfo> stations;               // sorted by station_id
  std::vector<avail::StationSeries> series;        // aligned with stations
  std::vector<std::vector<int>> zone_station_join; // per zone (engine order), station indices
  std::vector<avail::ZoneAvailability> zones;      // engine zone order
  std::set<std::string> served;                    // zones with capacity > 0
  std::map<std::string, std::array<double, 24>> z; // served zones only
  avail::SurplusResult surplus;
};

struct CategoryAccess {
  // Over analyzable zones, engine order.
  std::vector<metrics::AccessZone> frame;
  std::vector<metrics::AccessScore> scores;
};

struct MetricsData {
  std::map<std::string, std::array<double, 24>> d_sp;  // served zones + fixed 1 rows
  CategoryAccess commute;
  CategoryAccess recreational;
  std::map<std::string, std::array<double, 24>> zi_commute;       // served zones only
  std::map<std::string, std::array<double, 24>> zi_recreational;  // served zones only
};

struct RecoveryData {
  std::vector<recovery::RecoveryProfile> profiles;  // served zones, sorted by zone_id
};

struct OverlayData {
  demographics::PovertyTable poverty;
  std::vector<demographics::PersonFlags> person_flags;
  std::vector<demographics::SegmentCounts> segments;
  std::vector<demographics::SegmentOverlay> overlays;
};

struct ComparisonRow {
  std::string combination;
  bool computed = false;
  std::string note;  // reason when not computed
  stats::ComparisonReport report;
};

struct ComparisonData {
  std::vector<ComparisonRow> rows;  // one per combination, segment order
};

struct ClusterData {
  std::vector<std::string> zone_ids;  // served zones, sorted
  std::vector<std::string> feature_names;
  cluster::ClusterResult result;
  double rand_vs_parent = 0.0;
};

// Lazy stage-by-stage pipeline over one configuration. Stage results are
// cached; periods are independent. All artifact writers return paths
// relative to the output directory.
class Engine {
public:
  explicit Engine(RunConfig cfg);
  ~Engine();

  const RunConfig& config() const { return cfg_; }

  // Base inputs (loaded once).
  const std::vector<ingest::ZoneGeometry>& zones();
  const ingest::ActivityZoneSet& activity();
  const ingest::PopulationTable& population();

  // Zone bookkeeping: analyzable zones were served in at least one period;
  // the remainder carry the never-served marker.
  const std::vector<std::string>& analyzable_zones();
  const std::set<std::string>& never_served_zones();

  const PeriodData& period(const std::string& name);
  const MetricsData& metrics_data(const std::string& name);
  const RecoveryData& recovery_data(const std::string& name);
  const OverlayData& overlay_data();
  const ComparisonData& comparison_data(const std::string& name);
  const ClusterData& cluster_data(const std::string& name);

  // Layer assembly for exports and diffs. Valid names: zeta, z, d_sp, sr,
  // i_access, zi_access; the last two require a category.
  layer::MetricLayer build_layer(const std::string& layer_name, const std::string& period,
                                 const std::string& category = "");

  // Artifact writers; each ensures the output directory exists.
  std::vector<std::string> write_ingest(const std::string& period);
  std::vector<std::string> write_availability(const std::string& period);
  std::vector<std::string> write_metrics(const std::string& period,
                                         const std::string& category_filter = "");
  std::vector<std::string> write_recovery(const std::string& period);
  std::vector<std::string> write_overlay();
  std::vector<std::string> write_compare(const std::string& period);
  std::vector<std::string> write_cluster(const std::string& period);
  std::vector<std::string> write_diff(const std::string& layer_name, const std::string& category,
                                      int hour);

  // Full artifact set plus manifest.json. Partial outputs are removed when a
  // stage fails.
  std::vector<std::string> run_all();

private:
  struct Cache;
  RunConfig cfg_;
  std::unique_ptr<Cache> cache_;

  const PeriodInput& period_input(const std::string& name) const;
};

}  // namespace equity::pipeline
