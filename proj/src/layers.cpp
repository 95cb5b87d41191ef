#include "equity/layers.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "equity/csv.hpp"

namespace equity::layer {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Round through the 9-significant-digit text form so table and geo exports
// carry bit-identical values.
double round9(double v) {
  return std::strtod(csv::format_value(v).c_str(), nullptr);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InternalError("cannot open output file: " + path);
  }
  return out;
}

void check_layer(const MetricLayer& layer) {
  const std::size_t want = layer.hourly ? 24 : 1;
  for (const auto& [zone, vals] : layer.values) {
    if (vals.size() != want) {
      throw InternalError("layer " + layer.name + " zone " + zone +
                          " has the wrong value count");
    }
    if (layer.never_served.count(zone)) {
      throw InternalError("layer " + layer.name + " zone " + zone +
                          " is marked never_served but carries values");
    }
  }
  for (const auto& zone : layer.no_service) {
    if (layer.never_served.count(zone)) {
      throw InternalError("layer " + layer.name + " zone " + zone +
                          " carries both service markers");
    }
  }
}

}  // namespace

std::vector<std::string> MetricLayer::zone_universe() const {
  std::set<std::string> ids;
  for (const auto& [zone, vals] : values) ids.insert(zone);
  ids.insert(no_service.begin(), no_service.end());
  ids.insert(never_served.begin(), never_served.end());
  return {ids.begin(), ids.end()};
}

void export_table(const MetricLayer& layer, const std::string& path) {
  check_layer(layer);
  std::ofstream out = open_out(path);
  out << "zone_id";
  if (layer.hourly) {
    for (int h = 0; h < 24; ++h) {
      char col[16];
      std::snprintf(col, sizeof(col), ",value_h%02d", h);
      out << col;
    }
  } else {
    out << ",value";
  }
  out << ",no_service,never_served\n";
  for (const std::string& zone : layer.zone_universe()) {
    out << csv::quote_field(zone);
    const auto it = layer.values.find(zone);
    const std::size_t cols = layer.hourly ? 24 : 1;
    for (std::size_t i = 0; i < cols; ++i) {
      out << ',';
      if (it != layer.values.end()) out << csv::format_value(it->second[i]);
    }
    out << ',' << (layer.no_service.count(zone) ? "true" : "false");
    out << ',' << (layer.never_served.count(zone) ? "true" : "false");
    out << '\n';
  }
}

void export_geojson(const MetricLayer& layer, const std::vector<ingest::ZoneGeometry>& zones,
                    const std::string& path) {
  check_layer(layer);
  std::map<std::string, const ingest::ZoneGeometry*> by_id;
  for (const auto& z : zones) by_id[z.zone_id] = &z;

  json features = json::array();
  for (const std::string& zone : layer.zone_universe()) {
    auto geo_it = by_id.find(zone);
    if (geo_it == by_id.end()) {
      throw InputError("layer " + layer.name + " references unknown zone " + zone);
    }
    json props;
    props["zone_id"] = zone;
    const auto it = layer.values.find(zone);
    if (it != layer.values.end()) {
      if (layer.hourly) {
        for (int h = 0; h < 24; ++h) {
          char col[16];
          std::snprintf(col, sizeof(col), "value_h%02d", h);
          props[col] = round9(it->second[static_cast<std::size_t>(h)]);
        }
      } else {
        props["value"] = round9(it->second[0]);
      }
    }
    props["no_service"] = layer.no_service.count(zone) > 0;
    props["never_served"] = layer.never_served.count(zone) > 0;

    json rings = json::array();
    for (const auto& ring : geo_it->second->rings) {
      json coords = json::array();
      for (const auto& pt : ring) {
        coords.push_back(json::array({pt.lon, pt.lat}));
      }
      rings.push_back(std::move(coords));
    }
    json feature;
    feature["type"] = "Feature";
    feature["properties"] = std::move(props);
    feature["geometry"] = {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
    features.push_back(std::move(feature));
  }
  json fc;
  fc["type"] = "FeatureCollection";
  fc["name"] = layer.name + (layer.period.empty() ? "" : "_" + layer.period) +
               (layer.category.empty() ? "" : "_" + layer.category);
  fc["features"] = std::move(features);
  std::ofstream out = open_out(path);
  out << fc.dump(2) << '\n';
}

DiffTable diff_periods(const MetricLayer& before, const MetricLayer& after,
                       bool higher_is_better, int hour) {
  check_layer(before);
  check_layer(after);
  if (before.hourly != after.hourly) {
    throw InternalError("cannot diff an hourly layer against a single-value layer");
  }
  if (hour >= 0 && !before.hourly) {
    throw InternalError("hour selection applies only to hourly layers");
  }
  if (hour > 23) {
    throw InternalError("hour out of range");
  }
  const std::vector<std::string> ub = before.zone_universe();
  const std::vector<std::string> ua = after.zone_universe();
  if (ub != ua) {
    std::vector<std::string> only_before, only_after;
    std::set_difference(ub.begin(), ub.end(), ua.begin(), ua.end(),
                        std::back_inserter(only_before));
    std::set_difference(ua.begin(), ua.end(), ub.begin(), ub.end(),
                        std::back_inserter(only_after));
    std::string msg = "diff: layers cover different zones;";
    for (const auto& z : only_before) msg += " -" + z;
    for (const auto& z : only_after) msg += " +" + z;
    throw InputError(msg);
  }

  const auto scalar = [&](const MetricLayer& l, const std::string& zone, double& out) {
    const auto it = l.values.find(zone);
    if (it == l.values.end()) return false;
    if (!l.hourly) {
      out = it->second[0];
    } else if (hour >= 0) {
      out = it->second[static_cast<std::size_t>(hour)];
    } else {
      double acc = 0.0;
      for (double v : it->second) acc += v;
      out = acc / 24.0;
    }
    return true;
  };

  DiffTable table;
  table.layer_name = before.name;
  table.category = before.category;
  table.hour = before.hourly ? hour : -1;
  table.higher_is_better = higher_is_better;
  constexpr double kEps = 1e-12;
  for (const std::string& zone : ub) {
    DiffRow row;
    row.zone_id = zone;
    double vb = 0.0, va = 0.0;
    if (scalar(before, zone, vb) && scalar(after, zone, va)) {
      row.has_delta = true;
      row.before = vb;
      row.after = va;
      row.delta = va - vb;
      if (std::abs(row.delta) <= kEps) {
        row.status = "unchanged";
        ++table.unchanged;
      } else if ((row.delta > 0.0) == higher_is_better) {
        row.status = "improved";
        ++table.improved;
      } else {
        row.status = "worsened";
        ++table.worsened;
      }
    } else {
      row.status = "no_value";
      ++table.no_value;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void export_diff(const DiffTable& diff, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "zone_id,before,after,delta,status\n";
  for (const DiffRow& r : diff.rows) {
    out << csv::quote_field(r.zone_id) << ',';
    if (r.has_delta) {
      out << csv::format_value(r.before) << ',' << csv::format_value(r.after) << ','
          << csv::format_value(r.delta);
    } else {
      out << ",,";
    }
    out << ',' << r.status << '\n';
  }
}

std::string fingerprint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InternalError("cannot read artifact for fingerprinting: " + path);
  }
  std::uint64_t hash = 14695981039346656037ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

void write_manifest(const std::string& out_dir, const std::vector<std::string>& relative_paths,
                    const std::string& tool_version) {
  std::vector<std::string> sorted(relative_paths);
  std::sort(sorted.begin(), sorted.end());
  json artifacts = json::array();
  for (const std::string& rel : sorted) {
    const fs::path full = fs::path(out_dir) / rel;
    json entry;
    entry["path"] = rel;
    entry["bytes"] = static_cast<std::uint64_t>(fs::file_size(full));
    entry["fnv1a64"] = fingerprint_file(full.string());
    artifacts.push_back(std::move(entry));
  }
  json manifest;
  manifest["artifacts"] = std::move(artifacts);
  manifest["generator"] = "equity " + tool_version;
  std::ofstream out = open_out((fs::path(out_dir) / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace equity::layer
