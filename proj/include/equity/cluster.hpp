#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "equity/types.hpp"

namespace equity::cluster {

// Column-wise zero mean, unit variance. Constant columns become all zeros.
std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& rows);

struct ClusterResult {
  std::vector<int> labels;  // aligned with input rows, values in [0, K)
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  int iterations = 0;  // of the winning restart
};

// Lloyd k-means. Seeding draws a start point per restart from the seeded
// generator, then extends greedily to the farthest point; ties break toward
// the lowest row index, so a fixed seed gives a bit-identical assignment.
// Errors when K exceeds the row count or rows are empty/ragged.
ClusterResult kmeans(const std::vector<std::vector<double>>& rows, int k, std::uint64_t seed,
                     int restarts = 20, int max_iterations = 100);

// Pairwise agreement between two labelings of the same rows: fraction of row
// pairs on which the labelings agree (together in both or apart in both).
double rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace equity::cluster
