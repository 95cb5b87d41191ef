#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include <json.hpp>

#include "equity/availability.hpp"
#include "equity/metrics.hpp"
#include "equity/types.hpp"

using namespace equity;

namespace {

// Brute-force rank helpers, deliberately naive: quadratic counting loops,
// no sharing with the library implementations.
std::vector<double> naive_eta(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int le = 0;
    for (double u : v) {
      if (u <= v[i]) ++le;
    }
    out[i] = static_cast<double>(le) / static_cast<double>(v.size());
  }
  return out;
}

std::vector<double> naive_reversed(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int ge = 0;
    for (double u : v) {
      if (u >= v[i]) ++ge;
    }
    out[i] = static_cast<double>(ge) / static_cast<double>(v.size());
  }
  return out;
}

std::vector<double> naive_minmax(const std::vector<double>& v) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<double> out(v.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / (hi - lo);
  }
  return out;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, bool with_ties) {
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  if (with_ties && n > 2) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < n / 3; ++k) v[pick(rng)] = v[pick(rng)];
  }
  return v;
}

}  // namespace

TEST_CASE("minmax maps the documented examples") {
  const std::vector<double> a{2.0, 4.0, 6.0};
  CHECK(metrics::minmax(a) == std::vector<double>{0.0, 0.5, 1.0});
  const std::vector<double> constant{5.0, 5.0, 5.0};
  CHECK(metrics::minmax(constant) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK_THROWS_AS(metrics::minmax(std::vector<double>{}), InternalError);
}

TEST_CASE("percentile rank follows the weak-inequality convention") {
  const std::vector<double> v{10.0, 20.0, 30.0};
  const auto eta = metrics::percentile_rank(v);
  CHECK(eta[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(eta[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(eta[2] == 1.0);

  const std::vector<double> equal{7.0, 7.0, 7.0, 7.0};
  for (double r : metrics::percentile_rank(equal)) CHECK(r == 1.0);

  // counting identity: weak-below and strict-above partition the vector
  const std::vector<double> unique{3.0, 1.0, 4.0, 1.5, 9.0};
  const auto ranks = metrics::percentile_rank(unique);
  for (std::size_t i = 0; i < unique.size(); ++i) {
    int exceeders = 0;
    for (double u : unique) {
      if (u > unique[i]) ++exceeders;
    }
    const double lhs = ranks[i] + static_cast<double>(exceeders) / unique.size();
    CHECK(lhs == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lognorm matches the closed-form example and rejects negatives") {
  const double e = std::exp(1.0);
  const std::vector<double> v{0.0, e - 1.0, e * e - 1.0};
  const auto out = metrics::lognorm(v);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[2] == 1.0);
  CHECK_THROWS_AS(metrics::lognorm(std::vector<double>{1.0, -0.5}), InternalError);
}

TEST_CASE("rank and normalization properties hold on 1000 random vectors") {
  std::mt19937_64 rng(991);
  std::uniform_int_distribution<std::size_t> size_dist(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size_dist(rng);
    const auto v = random_vector(rng, n, trial % 2 == 0);

    // minmax range exactness
    const auto mm = metrics::minmax(v);
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    if (*lo_it < *hi_it) {
      CHECK(mm[static_cast<std::size_t>(lo_it - v.begin())] == 0.0);
      CHECK(mm[static_cast<std::size_t>(hi_it - v.begin())] == 1.0);
    }
    for (double x : mm) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }

    // eta: monotone with tie equality, matches the naive count
    const auto eta = metrics::percentile_rank(v);
    const auto eta_ref = naive_eta(v);
    const auto rev = avail::reversed_rank(v);
    const auto rev_ref = naive_reversed(v);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(eta[i] == doctest::Approx(eta_ref[i]).epsilon(1e-15));
      CHECK(rev[i] == doctest::Approx(rev_ref[i]).epsilon(1e-15));
      CHECK(eta[i] > 0.0);
      CHECK(eta[i] <= 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (v[i] < v[j]) {
          CHECK(eta[i] <= eta[j]);
          CHECK(rev[i] >= rev[j]);  // antitone
        } else if (v[i] == v[j]) {
          CHECK(eta[i] == eta[j]);
          CHECK(rev[i] == rev[j]);
        }
      }
    }

    // lognorm preserves order on nonnegative shifts
    std::vector<double> nn(v);
    const double shift = -*std::min_element(nn.begin(), nn.end());
    for (double& x : nn) x += shift;
    const auto ln = metrics::lognorm(nn);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (nn[i] < nn[i + 1]) CHECK(ln[i] <= ln[i + 1]);
      if (nn[i] == nn[i + 1]) CHECK(ln[i] == ln[i + 1]);
    }
  }
}

TEST_CASE("disparity reproduces the two-zone example") {
  // equal pm, populations 100 and 200: eta = [0.5, 1], products minmaxed
  const std::vector<double> pm{0.7, 0.7};
  const std::vector<double> n{100.0, 200.0};
  CHECK(metrics::disparity(pm, n) == std::vector<double>{0.0, 1.0});

  const std::vector<double> single_pm{0.4};
  const std::vector<double> single_n{120.0};
  CHECK(metrics::disparity(single_pm, single_n) == std::vector<double>{0.0});
}

TEST_CASE("access insufficiency gates zones at or above the parent mean") {
  std::vector<metrics::AccessZone> zones(3);
  for (std::size_t i = 0; i < 3; ++i) {
    zones[i].zone_id = "Z" + std::to_string(i + 1);
    zones[i].parent_id = "P";
    zones[i].population = 100.0;
  }
  zones[0].reach_area = 0.0;
  zones[1].reach_area = 50.0;
  zones[2].reach_area = 100.0;
  const auto scores = metrics::i_access(zones);
  // parent mean k = 50; only zone 1 sits below it
  CHECK(scores[0].parent_mean == doctest::Approx(50.0));
  CHECK(scores[0].deficit == doctest::Approx(1.0));
  CHECK(scores[1].deficit == 0.0);
  CHECK(scores[2].deficit == 0.0);
  CHECK(scores[0].i_access == 1.0);
  CHECK(scores[1].i_access == 0.0);
  CHECK(scores[2].i_access == 0.0);
  for (const auto& s : scores) CHECK_FALSE(s.parent_degenerate);
}

TEST_CASE("access insufficiency flags a zero-area parent as degenerate") {
  std::vector<metrics::AccessZone> zones(2);
  zones[0] = {"Z1", "P", 500.0, 0.0};
  zones[1] = {"Z2", "P", 300.0, 0.0};
  const auto scores = metrics::i_access(zones);
  for (const auto& s : scores) {
    CHECK(s.parent_degenerate);
    CHECK(s.deficit == 0.0);
    CHECK(s.i_access == 0.0);
  }
}

TEST_CASE("access insufficiency is invariant under uniform area scaling") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> area(0.0, 5.0e6);
  std::uniform_real_distribution<double> pop(10.0, 2000.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<metrics::AccessZone> zones(6);
    for (std::size_t i = 0; i < zones.size(); ++i) {
      zones[i].zone_id = "Z" + std::to_string(i);
      zones[i].parent_id = i < 3 ? "A" : "B";
      zones[i].population = pop(rng);
      zones[i].reach_area = area(rng);
    }
    const auto base = metrics::i_access(zones);
    auto scaled = zones;
    for (auto& z : scaled) z.reach_area *= 3.75;
    const auto rescored = metrics::i_access(scaled);
    for (std::size_t i = 0; i < zones.size(); ++i) {
      CHECK(rescored[i].i_access == doctest::Approx(base[i].i_access).epsilon(1e-12));
      CHECK(rescored[i].deficit == doctest::Approx(base[i].deficit).epsilon(1e-12));
    }
  }
}

TEST_CASE("adding an above-mean zone never changes who carries deficit, k held fixed") {
  std::vector<metrics::AccessZone> zones(4);
  const double xs[] = {10.0, 80.0, 35.0, 60.0};
  for (std::size_t i = 0; i < 4; ++i) {
    zones[i] = {"Z" + std::to_string(i), "P", 200.0, xs[i]};
  }
  const std::vector<double> k(4, 50.0);
  const auto base = metrics::i_access_with_k(zones, k);

  auto extended = zones;
  extended.push_back({"Z4", "P", 150.0, 75.0});  // at or above k
  const std::vector<double> k5(5, 50.0);
  const auto ext = metrics::i_access_with_k(extended, k5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK((base[i].insufficiency_log > 0.0) == (ext[i].insufficiency_log > 0.0));
  }
  CHECK(ext[4].insufficiency_log == 0.0);
}

TEST_CASE("zi_access follows the documented product examples") {
  std::vector<metrics::AccessZone> zones(2);
  zones[0] = {"Z1", "P", 100.0, 10.0};
  zones[1] = {"Z2", "P", 100.0, 10.0};  // identical access terms
  const auto access = metrics::i_access_with_k(zones, std::vector<double>{40.0, 40.0});
  const std::vector<double> z{0.3, 0.9};
  CHECK(metrics::zi_access(z, access) == std::vector<double>{0.0, 1.0});

  // identical zones in every input: degenerate minmax
  const std::vector<double> z_same{0.5, 0.5};
  CHECK(metrics::zi_access(z_same, access) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("zi_access ordering matches z ordering when access terms tie") {
  std::mt19937_64 rng(1213);
  std::uniform_real_distribution<double> zdist(0.01, 1.0);
  std::vector<metrics::AccessZone> zones(5);
  for (std::size_t i = 0; i < zones.size(); ++i) {
    zones[i] = {"Z" + std::to_string(i), "P", 400.0, 20.0};
  }
  const auto access = metrics::i_access_with_k(zones, std::vector<double>(5, 80.0));
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(5);
    for (double& x : z) x = zdist(rng);
    const auto zi = metrics::zi_access(z, access);
    for (std::size_t a = 0; a < 5; ++a) {
      for (std::size_t b = 0; b < 5; ++b) {
        if (z[a] > z[b]) CHECK(zi[a] >= zi[b]);
      }
    }
  }
}

// Direct-formula evaluation of the whole metric stack on the committed
// 8-zone fixture, sharing no code with the library path.
TEST_CASE("brute-force stack oracle matches module outputs to 1e-12") {
  std::ifstream in(std::string(EQUITY_FIXTURE_DIR) + "/oracle_stack.json");
  REQUIRE(in.good());
  nlohmann::json doc;
  in >> doc;

  struct Zone {
    std::string id, parent;
    double n = 0, x = 0, cap = 0;
    std::vector<double> avail;
  };
  std::vector<Zone> zs;
  for (const auto& j : doc.at("zones")) {
    Zone z;
    z.id = j.at("zone_id");
    z.parent = j.at("parent_id");
    z.n = j.at("population");
    z.x = j.at("reach_commute");
    z.cap = j.at("capacity");
    z.avail = j.at("available").get<std::vector<double>>();
    zs.push_back(std::move(z));
  }
  const std::size_t N = zs.size();
  REQUIRE(N <= 10);

  // Oracle, hour by hour: ratio, reversed rank, population-weighted
  // disparity, access insufficiency, and the integrated index.
  std::vector<std::vector<double>> zeta_oracle(N, std::vector<double>(24));
  for (std::size_t i = 0; i < N; ++i) {
    for (int h = 0; h < 24; ++h) zeta_oracle[i][h] = zs[i].avail[h] / zs[i].cap;
  }

  std::vector<double> kmean(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double sum = 0.0;
    int count = 0;
    for (const Zone& other : zs) {
      if (other.parent == zs[i].parent) {
        sum += other.x;
        ++count;
      }
    }
    kmean[i] = sum / count;
  }
  std::vector<double> insuff(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double deficit = 0.0;
    if (zs[i].x < kmean[i] && kmean[i] > 0.0) {
      const double r = (kmean[i] - zs[i].x) / kmean[i];
      deficit = r * r;
    }
    insuff[i] = std::log(1.0 + zs[i].n) * std::log(1.0 + deficit);
  }
  const std::vector<double> i_access_oracle = naive_minmax(insuff);
  const std::vector<double> eta_insuff = naive_eta(insuff);

  std::vector<double> pops(N);
  for (std::size_t i = 0; i < N; ++i) pops[i] = zs[i].n;
  const std::vector<double> eta_pop = naive_eta(pops);

  // Module path.
  std::vector<metrics::AccessZone> frame(N);
  for (std::size_t i = 0; i < N; ++i) {
    frame[i] = {zs[i].id, zs[i].parent, zs[i].n, zs[i].x};
  }
  const auto scores = metrics::i_access(frame);
  for (std::size_t i = 0; i < N; ++i) {
    CHECK(scores[i].parent_mean == doctest::Approx(kmean[i]).epsilon(1e-12));
    CHECK(std::abs(scores[i].i_access - i_access_oracle[i]) < 1e-12);
  }

  for (int h = 0; h < 24; ++h) {
    std::vector<double> zeta_h(N);
    for (std::size_t i = 0; i < N; ++i) zeta_h[i] = zs[i].avail[h] / zs[i].cap;
    const auto z_mod = avail::reversed_rank(zeta_h);
    const auto z_oracle = naive_reversed(zeta_h);
    for (std::size_t i = 0; i < N; ++i) {
      CHECK(std::abs(zeta_h[i] - zeta_oracle[i][h]) < 1e-12);
      CHECK(std::abs(z_mod[i] - z_oracle[i]) < 1e-12);
    }

    const auto d_mod = metrics::disparity(z_mod, pops);
    std::vector<double> prod(N);
    for (std::size_t i = 0; i < N; ++i) prod[i] = z_oracle[i] * eta_pop[i];
    const auto d_oracle = naive_minmax(prod);
    for (std::size_t i = 0; i < N; ++i) CHECK(std::abs(d_mod[i] - d_oracle[i]) < 1e-12);

    const auto zi_mod = metrics::zi_access(z_mod, scores);
    std::vector<double> zi_prod(N);
    for (std::size_t i = 0; i < N; ++i) zi_prod[i] = z_oracle[i] * eta_insuff[i];
    const auto zi_oracle = naive_minmax(zi_prod);
    for (std::size_t i = 0; i < N; ++i) CHECK(std::abs(zi_mod[i] - zi_oracle[i]) < 1e-12);
  }
}
