#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "equity/geometry.hpp"
#include "equity/types.hpp"

using namespace equity;
using geom::Box;
using geom::PlanarPoint;
using geom::Polygon;
using geom::PolySet;

namespace {

PolySet unit_square() {
  Polygon p;
  p.outer = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  return {p};
}

PolySet square(double x0, double y0, double side) {
  Polygon p;
  p.outer = {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}};
  return {p};
}

}  // namespace

TEST_CASE("projection round-trips and enforces the bounding box") {
  BoundingBox box;
  box.min_lon = -74.1;
  box.max_lon = -73.8;
  box.min_lat = 40.6;
  box.max_lat = 40.9;
  const geom::Projection proj(40.75, -73.95, box);
  const auto p = proj.project(-73.9, 40.8);
  const auto back = proj.unproject(p);
  CHECK(back.lon == doctest::Approx(-73.9).epsilon(1e-12));
  CHECK(back.lat == doctest::Approx(40.8).epsilon(1e-12));
  // one degree of latitude spans about 111.2 km in this frame
  const auto north = proj.project(-73.95, 40.85);
  const auto south = proj.project(-73.95, 40.65);
  CHECK((north.y - south.y) == doctest::Approx(0.2 * 111194.9).epsilon(1e-3));
  CHECK_THROWS_AS(proj.project(-75.0, 40.8), InputError);
  CHECK_THROWS_AS(proj.project(-73.9, 41.5), InputError);
}

TEST_CASE("polygon area handles holes and multiple parts") {
  CHECK(geom::area(unit_square()) == doctest::Approx(1.0));
  Polygon holed;
  holed.outer = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  holed.holes.push_back({{1, 1}, {2, 1}, {2, 2}, {1, 2}});
  CHECK(geom::area({holed}) == doctest::Approx(15.0));
  PolySet multi = unit_square();
  multi.push_back(square(10, 10, 2)[0]);
  CHECK(geom::area(multi) == doctest::Approx(5.0));
}

TEST_CASE("buffer area tracks the dilation formula within one percent") {
  // exact dilated-square area: A + P*r + pi*r^2 with A=1, P=4
  for (double r : {0.1, 0.5, 1.0, 3.0}) {
    const double expected = 1.0 + 4.0 * r + std::numbers::pi * r * r;
    const double got = geom::area(geom::buffer(unit_square(), r));
    CHECK(std::abs(got - expected) / expected < 0.01);
    CHECK(got <= expected + 1e-9);  // inscribed joins stay inside the true disc
  }
  CHECK_THROWS_AS(geom::buffer(unit_square(), 0.0), InputError);
  CHECK_THROWS_AS(geom::buffer(unit_square(), -5.0), InputError);
  Polygon degenerate;
  degenerate.outer = {{0, 0}, {1, 0}, {0, 0}};
  CHECK_THROWS_AS(geom::buffer({degenerate}, 1.0), InputError);
}

TEST_CASE("covers treats the boundary as inside") {
  const auto sq = unit_square();
  CHECK(geom::covers(sq, {0.5, 0.5}));
  CHECK(geom::covers(sq, {0.0, 0.5}));
  CHECK(geom::covers(sq, {1.0, 1.0}));
  CHECK_FALSE(geom::covers(sq, {1.0000001, 0.5}));
  CHECK_FALSE(geom::covers(sq, {-0.1, 0.5}));
  Polygon holed;
  holed.outer = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  holed.holes.push_back({{1, 1}, {3, 1}, {3, 3}, {1, 3}});
  CHECK_FALSE(geom::covers({holed}, {2, 2}));
  CHECK(geom::covers({holed}, {0.5, 0.5}));
}

TEST_CASE("intersection area matches hand geometry") {
  CHECK(geom::intersection_area(unit_square(), square(0.5, 0.5, 1.0)) ==
        doctest::Approx(0.25));
  CHECK(geom::intersection_area(unit_square(), square(5, 5, 1)) == doctest::Approx(0.0));
  CHECK(geom::intersection_area(unit_square(), unit_square()) == doctest::Approx(1.0));
}

TEST_CASE("spatial index returns a superset that exact tests refine") {
  geom::SpatialIndex index;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::vector<Box> boxes;
  for (int i = 0; i < 400; ++i) {
    const double x = coord(rng), y = coord(rng);
    Box b{{x, y}, {x + 30, y + 30}};
    boxes.push_back(b);
    index.insert(b, i);
  }
  CHECK(index.size() == 400);
  const auto overlaps = [](const Box& a, const Box& b) {
    return a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y;
  };
  for (int q = 0; q < 50; ++q) {
    const double x = coord(rng), y = coord(rng);
    const Box probe{{x, y}, {x + 80, y + 80}};
    std::vector<int> expected;
    for (int i = 0; i < 400; ++i)
      if (overlaps(boxes[i], probe)) expected.push_back(i);
    const auto got = index.query(probe);
    CHECK(std::is_sorted(got.begin(), got.end()));
    CHECK(got == expected);
  }
}

TEST_CASE("station join honours the reach radius at the boundary") {
  const auto zone = square(0, 0, 1000);  // zone [0,1000]^2, reach 500
  const std::vector<PlanarPoint> stations{
      {500, 1499},   // 499 m above the top edge: inside
      {500, 1501},   // 501 m above: outside
      {-499, 500},   // 499 m left: inside
      {1300, 1300},  // corner diagonal, dist ~424 from (1000,1000): inside
      {1400, 1400},  // dist ~566: outside
  };
  const auto hit = geom::stations_in_buffer(zone, stations, 500.0);
  CHECK(hit == std::vector<int>{0, 2, 3});
}

TEST_CASE("batched join equals the brute-force scan") {
  std::mt19937_64 rng(3141);
  std::uniform_real_distribution<double> coord(0.0, 5000.0);
  std::vector<PolySet> zones;
  for (int i = 0; i < 40; ++i) {
    const double x = coord(rng), y = coord(rng);
    zones.push_back(square(x, y, 400));
  }
  std::vector<PlanarPoint> stations(300);
  for (auto& s : stations) s = {coord(rng), coord(rng)};
  std::vector<PolySet> buffered;
  for (const auto& z : zones) buffered.push_back(geom::buffer(z, 350.0));

  const auto fast = geom::stations_in_buffers(buffered, stations);
  REQUIRE(fast.size() == zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    std::vector<int> brute;
    for (int s = 0; s < 300; ++s)
      if (geom::covers(buffered[i], stations[s])) brute.push_back(s);
    CHECK(fast[i] == brute);
  }
}

TEST_CASE("bounds and expand frame a polyset") {
  PolySet multi = unit_square();
  multi.push_back(square(5, -2, 3)[0]);
  const Box b = geom::bounds(multi);
  CHECK(b.min.x == doctest::Approx(0.0));
  CHECK(b.min.y == doctest::Approx(-2.0));
  CHECK(b.max.x == doctest::Approx(8.0));
  CHECK(b.max.y == doctest::Approx(1.0));
  const Box e = geom::expand(b, 10.0);
  CHECK(e.min.x == doctest::Approx(-10.0));
  CHECK(e.max.y == doctest::Approx(11.0));
}
