#include "equity/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/index/rtree.hpp>

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace equity::geom {

namespace {

constexpr double kMeanEarthRadiusM = 6371008.8;
constexpr double kDegToRad = 0.017453292519943295;
constexpr int kPointsPerCircle = 64;  // 16 segments per quadrant

using BoostPoint = bg::model::d2::point_xy<double>;
using BoostPolygon = bg::model::polygon<BoostPoint>;
using BoostMultiPolygon = bg::model::multi_polygon<BoostPolygon>;
using BoostBox = bg::model::box<BoostPoint>;

BoostMultiPolygon to_boost(const PolySet& polys) {
  BoostMultiPolygon mp;
  mp.reserve(polys.size());
  for (const Polygon& poly : polys) {
    BoostPolygon bp;
    for (const PlanarPoint& p : poly.outer) bp.outer().emplace_back(p.x, p.y);
    bp.inners().resize(poly.holes.size());
    for (std::size_t i = 0; i < poly.holes.size(); ++i) {
      for (const PlanarPoint& p : poly.holes[i]) bp.inners()[i].emplace_back(p.x, p.y);
    }
    mp.push_back(std::move(bp));
  }
  bg::correct(mp);
  return mp;
}

PolySet from_boost(const BoostMultiPolygon& mp) {
  PolySet out;
  out.reserve(mp.size());
  for (const BoostPolygon& bp : mp) {
    Polygon poly;
    for (const BoostPoint& p : bp.outer()) poly.outer.push_back({bg::get<0>(p), bg::get<1>(p)});
    for (const auto& inner : bp.inners()) {
      Ring hole;
      for (const BoostPoint& p : inner) hole.push_back({bg::get<0>(p), bg::get<1>(p)});
      poly.holes.push_back(std::move(hole));
    }
    out.push_back(std::move(poly));
  }
  return out;
}

}  // namespace

Projection::Projection(double ref_lat, double ref_lon, BoundingBox box)
    : ref_lat_(ref_lat), ref_lon_(ref_lon), box_(box) {
  meters_per_deg_lat_ = kDegToRad * kMeanEarthRadiusM;
  meters_per_deg_lon_ = meters_per_deg_lat_ * std::cos(ref_lat * kDegToRad);
}

PlanarPoint Projection::project(double lon, double lat) const {
  if (!box_.contains(lon, lat)) {
    throw InputError("point (" + std::to_string(lon) + ", " + std::to_string(lat) +
                     ") outside configured bounding box");
  }
  return {(lon - ref_lon_) * meters_per_deg_lon_, (lat - ref_lat_) * meters_per_deg_lat_};
}

LonLat Projection::unproject(PlanarPoint p) const {
  return {ref_lon_ + p.x / meters_per_deg_lon_, ref_lat_ + p.y / meters_per_deg_lat_};
}

PolySet Projection::project_rings(const std::vector<LonLatRing>& rings) const {
  if (rings.empty()) return {};
  Polygon poly;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    Ring ring;
    ring.reserve(rings[i].size());
    for (const LonLat& v : rings[i]) {
      PlanarPoint p = project(v.lon, v.lat);
      ring.push_back(p);
    }
    if (i == 0) poly.outer = std::move(ring);
    else poly.holes.push_back(std::move(ring));
  }
  return {std::move(poly)};
}

double area(const PolySet& polys) { return bg::area(to_boost(polys)); }

Box bounds(const PolySet& polys) {
  BoostBox bb;
  bg::envelope(to_boost(polys), bb);
  return {{bg::get<bg::min_corner, 0>(bb), bg::get<bg::min_corner, 1>(bb)},
          {bg::get<bg::max_corner, 0>(bb), bg::get<bg::max_corner, 1>(bb)}};
}

Box expand(const Box& b, double margin) {
  return {{b.min.x - margin, b.min.y - margin}, {b.max.x + margin, b.max.y + margin}};
}

PolySet buffer(const PolySet& polys, double radius_m) {
  if (radius_m <= 0.0) throw InputError("buffer radius must be positive");
  BoostMultiPolygon mp = to_boost(polys);
  if (bg::area(mp) <= 0.0) throw InputError("cannot buffer a degenerate (zero-area) polygon");
  bg::strategy::buffer::distance_symmetric<double> dist(radius_m);
  bg::strategy::buffer::join_round join(kPointsPerCircle);
  bg::strategy::buffer::end_round end(kPointsPerCircle);
  bg::strategy::buffer::point_circle circle(kPointsPerCircle);
  bg::strategy::buffer::side_straight side;
  BoostMultiPolygon out;
  bg::buffer(mp, out, dist, side, join, end, circle);
  return from_boost(out);
}

bool covers(const PolySet& polys, PlanarPoint p) {
  return bg::covered_by(BoostPoint(p.x, p.y), to_boost(polys));
}

double intersection_area(const PolySet& a, const PolySet& b) {
  BoostMultiPolygon out;
  bg::intersection(to_boost(a), to_boost(b), out);
  return bg::area(out);
}

struct SpatialIndex::Impl {
  using Entry = std::pair<BoostBox, int>;
  bgi::rtree<Entry, bgi::quadratic<16>> tree;
};

SpatialIndex::SpatialIndex() : impl_(std::make_unique<Impl>()) {}
SpatialIndex::~SpatialIndex() = default;
SpatialIndex::SpatialIndex(SpatialIndex&&) noexcept = default;
SpatialIndex& SpatialIndex::operator=(SpatialIndex&&) noexcept = default;

void SpatialIndex::insert(const Box& box, int payload) {
  impl_->tree.insert({BoostBox{{box.min.x, box.min.y}, {box.max.x, box.max.y}}, payload});
}

std::vector<int> SpatialIndex::query(const Box& box) const {
  std::vector<Impl::Entry> hits;
  impl_->tree.query(
      bgi::intersects(BoostBox{{box.min.x, box.min.y}, {box.max.x, box.max.y}}),
      std::back_inserter(hits));
  std::vector<int> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.second);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t SpatialIndex::size() const { return impl_->tree.size(); }

std::vector<int> stations_in_buffer(const PolySet& zone, const std::vector<PlanarPoint>& stations,
                                    double radius_m) {
  const PolySet dilated = buffer(zone, radius_m);
  std::vector<int> out;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (covers(dilated, stations[i])) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::vector<int>> stations_in_buffers(const std::vector<PolySet>& buffered_zones,
                                                  const std::vector<PlanarPoint>& stations) {
  SpatialIndex index;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const PlanarPoint& p = stations[i];
    index.insert({{p.x, p.y}, {p.x, p.y}}, static_cast<int>(i));
  }
  std::vector<std::vector<int>> result(buffered_zones.size());
  for (std::size_t z = 0; z < buffered_zones.size(); ++z) {
    const Box bb = bounds(buffered_zones[z]);
    for (int candidate : index.query(bb)) {
      if (covers(buffered_zones[z], stations[static_cast<std::size_t>(candidate)])) {
        result[z].push_back(candidate);
      }
    }
  }
  return result;
}

}  // namespace equity::geom
