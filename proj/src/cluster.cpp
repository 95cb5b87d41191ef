#include "equity/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace equity::cluster {

namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

struct Run {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  double inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

Run lloyd(const std::vector<std::vector<double>>& rows, int k, std::size_t first_center,
          int max_iterations) {
  const std::size_t n = rows.size();
  const std::size_t dim = rows[0].size();

  // Greedy farthest-point seeding from the drawn start.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(rows[first_center]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < static_cast<std::size_t>(k)) {
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_distance(rows[i], centroids.back()));
    }
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] > best) {
        best = nearest[i];
        far = i;
      }
    }
    centroids.push_back(rows[far]);
  }

  std::vector<int> labels(n, -1);
  Run run;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_distance(rows[i], centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      if (labels[i] != best_c) {
        labels[i] = best_c;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                          std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[static_cast<std::size_t>(labels[i])];
      for (std::size_t d = 0; d < dim; ++d) s[d] += rows[i][d];
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < k; ++c) {
      auto& s = sums[static_cast<std::size_t>(c)];
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Re-seat an emptied cluster on the point farthest from its own
        // centroid; lowest index on ties.
        std::size_t far = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              sq_distance(rows[i], centroids[static_cast<std::size_t>(labels[i])]);
          if (d > best) {
            best = d;
            far = i;
          }
        }
        s = rows[far];
      } else {
        for (std::size_t d = 0; d < dim; ++d) {
          s[d] /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
      }
      centroids[static_cast<std::size_t>(c)] = s;
    }
    run.iterations = iter;
    if (!changed) break;
  }
  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.inertia += sq_distance(rows[i], centroids[static_cast<std::size_t>(labels[i])]);
  }
  run.labels = std::move(labels);
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw InternalError("standardization over an empty feature table");
  }
  const std::size_t dim = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != dim) {
      throw InternalError("feature rows have inconsistent widths");
    }
  }
  const double n = static_cast<double>(rows.size());
  std::vector<double> mean(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += r[d];
  }
  for (auto& m : mean) m /= n;
  std::vector<double> sd(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = r[d] - mean[d];
      sd[d] += diff * diff;
    }
  }
  for (auto& s : sd) s = std::sqrt(s / n);
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      out[i][d] = sd[d] > 0.0 ? (rows[i][d] - mean[d]) / sd[d] : 0.0;
    }
  }
  return out;
}

ClusterResult kmeans(const std::vector<std::vector<double>>& rows, int k, std::uint64_t seed,
                     int restarts, int max_iterations) {
  if (rows.empty()) {
    throw InputError("clustering requires at least one zone");
  }
  if (k < 1 || static_cast<std::size_t>(k) > rows.size()) {
    throw InputError("cluster count must lie in [1, zone count]");
  }
  const std::size_t dim = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != dim || dim == 0) {
      throw InternalError("feature rows have inconsistent widths");
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  Run best;
  for (int r = 0; r < restarts; ++r) {
    Run run = lloyd(rows, k, pick(rng), max_iterations);
    if (run.inertia < best.inertia) {
      best = std::move(run);
    }
  }
  ClusterResult result;
  result.labels = std::move(best.labels);
  result.centroids = std::move(best.centroids);
  result.inertia = best.inertia;
  result.iterations = best.iterations;
  return result;
}

double rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw InternalError("labelings differ in length");
  }
  if (a.size() < 2) {
    throw InternalError("pairwise agreement needs at least 2 rows");
  }
  std::uint64_t agree = 0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool same_a = a[i] == a[j];
      const bool same_b = b[i] == b[j];
      if (same_a == same_b) ++agree;
      ++pairs;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

}  // namespace equity::cluster
