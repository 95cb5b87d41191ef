#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "equity/csv.hpp"
#include "equity/ingest.hpp"
#include "equity/layers.hpp"
#include "equity/types.hpp"

using namespace equity;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "equity_layers_test";
  fs::create_directories(dir);
  return dir;
}

layer::MetricLayer hourly_layer(const std::string& period) {
  layer::MetricLayer l;
  l.name = "zeta";
  l.period = period;
  l.hourly = true;
  std::vector<double> a(24), b(24);
  for (int h = 0; h < 24; ++h) {
    a[h] = 0.25 + 0.001 * h;
    b[h] = 0.5 + (period == "after" ? 0.01 : 0.0) + 0.002 * h;
  }
  l.values["Z1"] = a;
  l.values["Z2"] = b;
  l.no_service = {"Z3"};
  l.never_served = {"Z9"};
  return l;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("zone universe unions values and markers") {
  const auto l = hourly_layer("before");
  CHECK(l.zone_universe() == std::vector<std::string>{"Z1", "Z2", "Z3", "Z9"});
}

TEST_CASE("table export round-trips values at nine significant digits") {
  const auto dir = temp_dir();
  layer::MetricLayer l;
  l.name = "sr";
  l.period = "before";
  l.hourly = false;
  l.values["Z1"] = {0.123456789123};
  l.values["Z2"] = {12.0};
  l.never_served = {"Z9"};
  const auto path = (dir / "sr.csv").string();
  layer::export_table(l, path);

  std::ifstream in(path);
  csv::Reader reader(in, ',');
  REQUIRE(reader.header() ==
          std::vector<std::string>{"zone_id", "value", "no_service", "never_served"});
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  while (reader.next(row)) rows.push_back(row);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "Z1");
  CHECK(std::stod(rows[0][1]) == doctest::Approx(0.123456789).epsilon(1e-9));
  CHECK(rows[0][1].size() <= 12);  // nine significant digits, not seventeen
  CHECK(rows[1][1] == "12");
  CHECK(rows[2][0] == "Z9");
  CHECK(rows[2][1].empty());  // marker zones carry no value
  CHECK(rows[2][3] == "true");
  fs::remove_all(dir);
}

TEST_CASE("hourly export writes twenty-four value columns") {
  const auto dir = temp_dir();
  const auto l = hourly_layer("before");
  const auto path = (dir / "zeta.csv").string();
  layer::export_table(l, path);
  std::ifstream in(path);
  csv::Reader reader(in, ',');
  REQUIRE(reader.header().size() == 27);  // zone_id + 24 + two markers
  CHECK(reader.header()[1] == "value_h00");
  CHECK(reader.header()[24] == "value_h23");
  std::vector<std::string> row;
  REQUIRE(reader.next(row));
  CHECK(row[0] == "Z1");
  CHECK(std::stod(row[1]) == doctest::Approx(0.25));
  fs::remove_all(dir);
}

TEST_CASE("geojson export keeps one feature per zone with marker properties") {
  const auto dir = temp_dir();
  const std::string fixtures = std::string(EQUITY_FIXTURE_DIR) + "/minicity";
  const auto zones = ingest::load_zones(fixtures + "/zones.geojson", "tract", "district");
  layer::MetricLayer l;
  l.name = "sr";
  l.period = "before";
  l.values["T01"] = {3.5};
  l.values["T02"] = {7.0};
  l.no_service = {"T08"};
  const auto path = (dir / "sr.geojson").string();
  layer::export_geojson(l, zones, path);

  const auto doc = nlohmann::json::parse(slurp(path));
  CHECK(doc.at("type") == "FeatureCollection");
  const auto& features = doc.at("features");
  REQUIRE(features.size() == 3);
  bool saw_marker = false, saw_value = false;
  for (const auto& f : features) {
    const auto& props = f.at("properties");
    if (props.at("zone_id") == "T01") {
      saw_value = true;
      CHECK(props.at("value").get<double>() == doctest::Approx(3.5));
      CHECK(props.at("no_service").get<bool>() == false);
    }
    if (props.at("zone_id") == "T08") {
      saw_marker = true;
      CHECK(props.at("no_service").get<bool>() == true);
      CHECK_FALSE(props.contains("value"));
    }
    CHECK(f.at("geometry").at("type") == "Polygon");
  }
  CHECK(saw_value);
  CHECK(saw_marker);

  layer::MetricLayer orphan = l;
  orphan.values["ZZ"] = {1.0};
  CHECK_THROWS_AS(layer::export_geojson(orphan, zones, (dir / "bad.geojson").string()),
                  InputError);
  fs::remove_all(dir);
}

TEST_CASE("exports reject inconsistent marker combinations") {
  const auto dir = temp_dir();
  auto valued_never = hourly_layer("before");
  valued_never.never_served.insert("Z1");  // Z1 carries values
  CHECK_THROWS_AS(layer::export_table(valued_never, (dir / "x.csv").string()), InternalError);

  auto both_markers = hourly_layer("before");
  both_markers.never_served.insert("Z3");  // Z3 already flagged no_service
  CHECK_THROWS_AS(layer::export_table(both_markers, (dir / "y.csv").string()), InternalError);

  auto short_row = hourly_layer("before");
  short_row.values["Z1"].pop_back();
  CHECK_THROWS_AS(layer::export_table(short_row, (dir / "z.csv").string()), InternalError);
  fs::remove_all(dir);
}

TEST_CASE("period diff classifies deltas by polarity") {
  const auto before = hourly_layer("before");
  const auto after = hourly_layer("after");
  const auto diff = layer::diff_periods(before, after, /*higher_is_better=*/true);
  CHECK(diff.hour == -1);
  REQUIRE(diff.rows.size() == 4);
  CHECK(diff.rows[0].zone_id == "Z1");
  CHECK(diff.rows[0].status == "unchanged");  // identical series both periods
  CHECK(diff.rows[1].zone_id == "Z2");
  CHECK(diff.rows[1].status == "improved");   // after sits 0.01 higher
  CHECK(diff.rows[1].delta == doctest::Approx(0.01));
  CHECK(diff.rows[2].status == "no_value");   // marker zone
  CHECK(diff.rows[3].status == "no_value");
  CHECK(diff.improved == 1);
  CHECK(diff.unchanged == 1);
  CHECK(diff.no_value == 2);

  // with lower-is-better polarity the same delta worsens
  const auto flipped = layer::diff_periods(before, after, /*higher_is_better=*/false);
  CHECK(flipped.rows[1].status == "worsened");

  // a single hour compares that hour alone
  const auto at5 = layer::diff_periods(before, after, true, 5);
  CHECK(at5.hour == 5);
  CHECK(at5.rows[1].delta == doctest::Approx(0.01));
}

TEST_CASE("period diff rejects mismatched universes naming the difference") {
  auto before = hourly_layer("before");
  auto after = hourly_layer("after");
  before.values["ZX"] = std::vector<double>(24, 0.1);
  after.values["ZY"] = std::vector<double>(24, 0.1);
  try {
    layer::diff_periods(before, after, true);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    const std::string what = e.what();
    CHECK(what.find("-ZX") != std::string::npos);
    CHECK(what.find("+ZY") != std::string::npos);
  }
}

TEST_CASE("diff export writes the status table") {
  const auto dir = temp_dir();
  const auto diff =
      layer::diff_periods(hourly_layer("before"), hourly_layer("after"), true);
  const auto path = (dir / "diff.csv").string();
  layer::export_diff(diff, path);
  std::ifstream in(path);
  csv::Reader reader(in, ',');
  REQUIRE(reader.header() ==
          std::vector<std::string>{"zone_id", "before", "after", "delta", "status"});
  std::vector<std::string> row;
  int rows = 0;
  while (reader.next(row)) {
    ++rows;
    if (row[0] == "Z9") {
      CHECK(row[1].empty());
      CHECK(row[4] == "no_value");
    }
  }
  CHECK(rows == 4);
  fs::remove_all(dir);
}

TEST_CASE("file fingerprints match the FNV-1a reference vectors") {
  const auto dir = temp_dir();
  const auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    return (dir / name).string();
  };
  // offset basis for the empty input, then the classic single-letter vector
  CHECK(layer::fingerprint_file(write("empty.bin", "")) == "cbf29ce484222325");
  CHECK(layer::fingerprint_file(write("a.bin", "a")) == "af63dc4c8601ec8c");
  CHECK(layer::fingerprint_file(write("foobar.bin", "foobar")) == "85944171f73967e8");
  fs::remove_all(dir);
}

TEST_CASE("manifest lists every artifact with size and digest") {
  const auto dir = temp_dir();
  {
    std::ofstream(dir / "one.csv") << "zone_id\nZ1\n";
    std::ofstream(dir / "two.csv") << "zone_id\nZ2\n";
  }
  layer::write_manifest(dir.string(), {"two.csv", "one.csv"}, "9.9.9");
  const auto doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(doc.at("generator") == "equity 9.9.9");
  const auto& files = doc.at("artifacts");
  REQUIRE(files.size() == 2);
  CHECK(files[0].at("path") == "one.csv");  // sorted despite input order
  CHECK(files[1].at("path") == "two.csv");
  CHECK(files[0].at("bytes").get<std::int64_t>() == 11);
  CHECK(files[0].at("fnv1a64") ==
        layer::fingerprint_file((dir / "one.csv").string()));
  fs::remove_all(dir);
}
