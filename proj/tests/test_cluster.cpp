#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "equity/cluster.hpp"
#include "equity/types.hpp"

using namespace equity;

namespace {

// three tight blobs at (0,0), (10,0), (0,10)
std::vector<std::vector<double>> blob_rows(std::mt19937_64& rng, int per_blob,
                                           std::vector<int>& truth) {
  std::normal_distribution<double> jitter(0.0, 0.3);
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  std::vector<std::vector<double>> rows;
  truth.clear();
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < per_blob; ++i) {
      rows.push_back({centers[b][0] + jitter(rng), centers[b][1] + jitter(rng)});
      truth.push_back(b);
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("standardize centers and scales each column") {
  const auto out = cluster::standardize({{1.0, 100.0, 7.0}, {2.0, 200.0, 7.0}, {3.0, 300.0, 7.0}});
  REQUIRE(out.size() == 3);
  for (int col = 0; col < 2; ++col) {
    double mean = 0.0, var = 0.0;
    for (const auto& r : out) mean += r[col];
    mean /= 3.0;
    for (const auto& r : out) var += (r[col] - mean) * (r[col] - mean);
    var /= 3.0;  // population variance, matching the scaler
    CHECK(mean == doctest::Approx(0.0));
    CHECK(var == doctest::Approx(1.0));
  }
  for (const auto& r : out) CHECK(r[2] == 0.0);  // constant column zeroed
  CHECK(out[0][0] < out[1][0]);                  // order preserved
}

TEST_CASE("kmeans recovers separated blobs and stays deterministic") {
  std::mt19937_64 rng(5);
  std::vector<int> truth;
  const auto rows = blob_rows(rng, 12, truth);
  const auto first = cluster::kmeans(rows, 3, 42);
  const auto second = cluster::kmeans(rows, 3, 42);
  CHECK(first.labels == second.labels);
  CHECK(first.inertia == second.inertia);
  CHECK(first.iterations == second.iterations);
  CHECK(cluster::rand_index(first.labels, truth) == doctest::Approx(1.0));
  CHECK(first.centroids.size() == 3);
  CHECK(first.inertia < 36 * 2 * 0.3 * 0.3 * 4.0);  // well under the blob spread bound

  // a different seed may relabel clusters but partitions identically here
  const auto reseeded = cluster::kmeans(rows, 3, 7);
  CHECK(cluster::rand_index(first.labels, reseeded.labels) == doctest::Approx(1.0));
}

TEST_CASE("kmeans with k equal to the row count isolates every row") {
  const std::vector<std::vector<double>> rows{{0, 0}, {5, 0}, {0, 5}, {5, 5}};
  const auto r = cluster::kmeans(rows, 4, 1);
  std::set<int> labels(r.labels.begin(), r.labels.end());
  CHECK(labels.size() == 4);
  CHECK(r.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans single cluster centroid is the mean") {
  const std::vector<std::vector<double>> rows{{0, 0}, {2, 0}, {4, 6}};
  const auto r = cluster::kmeans(rows, 1, 9);
  CHECK(r.labels == std::vector<int>{0, 0, 0});
  CHECK(r.centroids[0][0] == doctest::Approx(2.0));
  CHECK(r.centroids[0][1] == doctest::Approx(2.0));
  // inertia is the summed squared distance to that mean
  double expect = 0.0;
  for (const auto& row : rows)
    expect += (row[0] - 2) * (row[0] - 2) + (row[1] - 2) * (row[1] - 2);
  CHECK(r.inertia == doctest::Approx(expect));
}

TEST_CASE("kmeans validates its inputs") {
  const std::vector<std::vector<double>> rows{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(cluster::kmeans(rows, 3, 1), InputError);
  CHECK_THROWS_AS(cluster::kmeans(rows, 0, 1), InputError);
  CHECK_THROWS_AS(cluster::kmeans({}, 1, 1), InputError);
  CHECK_THROWS_AS(cluster::kmeans({{1.0, 2.0}, {1.0}}, 1, 1), InternalError);
}

TEST_CASE("rand index scores pairwise agreement") {
  CHECK(cluster::rand_index(std::vector{0, 0, 1, 1}, std::vector{1, 1, 0, 0}) ==
        doctest::Approx(1.0));  // same partition, swapped names
  // pairs: (0,1) together/together, (2,3) apart in b; of 6 pairs, b splits
  // {2,3} so agreement drops by the pairs involving that break
  CHECK(cluster::rand_index(std::vector{0, 0, 1, 1}, std::vector{0, 0, 1, 2}) ==
        doctest::Approx(5.0 / 6.0));
  CHECK(cluster::rand_index(std::vector{0, 1, 2}, std::vector{0, 0, 0}) ==
        doctest::Approx(0.0));  // all apart vs all together
  CHECK_THROWS_AS(cluster::rand_index(std::vector{0, 1}, std::vector{0}), InternalError);
}
