#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "equity/ingest.hpp"

namespace equity::layer {

// One exportable choropleth: per-zone values, optionally hourly, plus the two
// figure markers. never_served zones never carry values; no_service zones may
// when the metric is service-independent (access insufficiency) or pinned by
// rule (the disparity layer's fixed 1).
struct MetricLayer {
  std::string name;
  std::string period;    // "before" / "after"; empty for period-free layers
  std::string category;  // empty, "commute", or "recreational"
  bool hourly = false;   // 24 values per zone vs 1
  std::map<std::string, std::vector<double>> values;
  std::set<std::string> no_service;    // unserved this period, served in the other
  std::set<std::string> never_served;  // unserved in both periods

  // Union of valued and marked zones, sorted.
  std::vector<std::string> zone_universe() const;
};

// Delimited export: zone_id, value or value_h00..value_h23, no_service,
// never_served. Values carry 9 significant digits; marker zones leave value
// cells empty unless the layer stores a value for them.
void export_table(const MetricLayer& layer, const std::string& path);

// GeoJSON FeatureCollection with one feature per zone in the layer; the same
// properties as the table columns. Errors when a layer zone has no geometry.
void export_geojson(const MetricLayer& layer, const std::vector<ingest::ZoneGeometry>& zones,
                    const std::string& path);

struct DiffRow {
  std::string zone_id;
  bool has_delta = false;
  double before = 0.0;
  double after = 0.0;
  double delta = 0.0;
  std::string status;  // improved / worsened / unchanged / no_value
};

struct DiffTable {
  std::string layer_name;
  std::string category;
  int hour = -1;  // -1: hourly layers compared on their 24-hour mean
  bool higher_is_better = false;
  std::vector<DiffRow> rows;  // sorted by zone_id
  int improved = 0;
  int worsened = 0;
  int unchanged = 0;
  int no_value = 0;
};

// Per-zone after-minus-before deltas. Layers must share a zone universe;
// a mismatch errors listing the symmetric difference. Hourly layers compare
// the named hour, or the across-hours mean when hour is -1. Zones lacking a
// value on either side become no_value rows.
DiffTable diff_periods(const MetricLayer& before, const MetricLayer& after,
                       bool higher_is_better, int hour = -1);

void export_diff(const DiffTable& diff, const std::string& path);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string fingerprint_file(const std::string& path);

// manifest.json: every artifact path with size and content digest, sorted by
// path. Paths are relative to the output directory.
void write_manifest(const std::string& out_dir, const std::vector<std::string>& relative_paths,
                    const std::string& tool_version);

}  // namespace equity::layer
