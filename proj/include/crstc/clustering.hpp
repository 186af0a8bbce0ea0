// crstc/clustering.hpp

// Copyright 2026 CRSTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Clustering of transition embeddings: k-means (k-means++ seeding, Lloyd
// iterations, deterministic restarts), bisecting k-means, flat-kernel mean
// shift, and silhouette-based selection of k.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "crstc/rng.hpp"

namespace crstc {

using PointSet = std::vector<std::vector<double>>;

struct ClusterResult {
  std::vector<int> labels;
  PointSet centroids;  // or modes for mean shift
  double inertia = 0.0;
  std::vector<double> iteration_inertia;  // one entry per Lloyd iteration
};

namespace detail {

inline double sq_dist(const std::vector<double>& a,
                      const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline void check_points(const PointSet& points, const char* op) {
  if (points.empty())
    throw std::invalid_argument(std::string(op) + ": empty input");
  for (const auto& p : points)
    if (p.size() != points[0].size())
      throw std::invalid_argument(std::string(op) + ": ragged points");
}

// k-means++ seeding: first center uniform, the rest proportional to the
// squared distance to the nearest chosen center.
inline PointSet kmeans_pp_init(const PointSet& points, std::size_t k,
                               Rng& rng) {
  PointSet centers;
  centers.push_back(points[rng.uniform_index(points.size())]);
  std::vector<double> d2(points.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // all points coincide with existing centers; fall back to uniform
      centers.push_back(points[rng.uniform_index(points.size())]);
      continue;
    }
    double r = rng.uniform01() * total;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

struct LloydOutcome {
  std::vector<int> labels;
  PointSet centroids;
  double inertia = 0.0;
  std::vector<double> iteration_inertia;
};

inline LloydOutcome lloyd(const PointSet& points, PointSet centers,
                          std::size_t max_iter, double tol) {
  const std::size_t n = points.size();
  const std::size_t k = centers.size();
  const std::size_t dim = points[0].size();
  std::vector<int> labels(n, 0);
  LloydOutcome out;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // assignment, ties to the lowest centroid index
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(points[i], centers[c]);
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      labels[i] = best_c;
      inertia += best;
    }
    out.iteration_inertia.push_back(inertia);

    // update
    PointSet next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) next[labels[i]][d] += points[i][d];
      ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (double& v : next[c]) v /= static_cast<double>(counts[c]);
    }

    // empty-cluster repair: move in the farthest point of the largest cluster
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t largest = 0;
      for (std::size_t c2 = 0; c2 < k; ++c2)
        if (counts[c2] > counts[largest]) largest = c2;
      double far_d = -1.0;
      std::size_t far_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != static_cast<int>(largest)) continue;
        const double d = sq_dist(points[i], next[largest]);
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      next[c] = points[far_i];
      labels[far_i] = static_cast<int>(c);
      counts[c] = 1;
      --counts[largest];
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(sq_dist(next[c], centers[c])));
    centers = std::move(next);
    if (shift < tol) break;
  }

  // final assignment against the converged centers
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(points[i], centers[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    labels[i] = best_c;
    inertia += best;
  }
  out.iteration_inertia.push_back(inertia);
  out.labels = std::move(labels);
  out.centroids = std::move(centers);
  out.inertia = inertia;
  return out;
}

// Exact 2-means by enumerating every bipartition; used for tiny inputs
// where Lloyd restarts cannot guarantee the global optimum.
inline ClusterResult exact_two_means(const PointSet& points) {
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  ClusterResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  // point 0 is pinned to cluster 0; bits select cluster 1 members
  for (std::uint32_t mask = 1; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> m0(dim, 0.0), m1(dim, 0.0);
    std::size_t c0 = 0, c1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in1 = i > 0 && ((mask >> (i - 1)) & 1u);
      auto& m = in1 ? m1 : m0;
      (in1 ? c1 : c0) += 1;
      for (std::size_t d = 0; d < dim; ++d) m[d] += points[i][d];
    }
    for (std::size_t d = 0; d < dim; ++d) {
      m0[d] /= static_cast<double>(c0);
      m1[d] /= static_cast<double>(c1);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in1 = i > 0 && ((mask >> (i - 1)) & 1u);
      inertia += detail::sq_dist(points[i], in1 ? m1 : m0);
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.centroids = {m0, m1};
      best.labels.assign(n, 0);
      for (std::size_t i = 1; i < n; ++i)
        if ((mask >> (i - 1)) & 1u) best.labels[i] = 1;
    }
  }
  best.iteration_inertia = {best.inertia};
  return best;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Runs n_init seeded restarts and
/// keeps the lowest-inertia solution; deterministic for a fixed seed and
/// input order. Inputs of at most 16 points with k = 2 are solved exactly by
/// bipartition enumeration.
inline ClusterResult kmeans(const PointSet& points, std::size_t k,
                            std::uint64_t seed, std::size_t max_iter = 300,
                            double tol = 1e-6, std::size_t n_init = 10) {
  detail::check_points(points, "kmeans");
  if (k < 1 || k > points.size())
    throw std::invalid_argument("kmeans: need 1 <= k <= #points");
  if (k == 2 && points.size() <= 16 && points.size() >= 2)
    return detail::exact_two_means(points);
  Rng rng(seed);
  ClusterResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < std::max<std::size_t>(1, n_init); ++run) {
    auto centers = detail::kmeans_pp_init(points, k, rng);
    auto outcome = detail::lloyd(points, std::move(centers), max_iter, tol);
    if (outcome.inertia < best.inertia) {
      best.labels = std::move(outcome.labels);
      best.centroids = std::move(outcome.centroids);
      best.inertia = outcome.inertia;
      best.iteration_inertia = std::move(outcome.iteration_inertia);
    }
  }
  return best;
}

/// Splits the largest-inertia cluster with 2-means until k clusters exist.
inline ClusterResult bisecting_kmeans(const PointSet& points, std::size_t k,
                                      std::uint64_t seed) {
  detail::check_points(points, "bisecting_kmeans");
  if (k < 1 || k > points.size())
    throw std::invalid_argument("bisecting_kmeans: need 1 <= k <= #points");

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> clusters{
      std::vector<std::size_t>(points.size())};
  std::iota(clusters[0].begin(), clusters[0].end(), 0);

  auto cluster_inertia = [&points](const std::vector<std::size_t>& members) {
    std::vector<double> mean(points[0].size(), 0.0);
    for (std::size_t i : members)
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += points[i][d];
    for (double& v : mean) v /= static_cast<double>(members.size());
    double acc = 0.0;
    for (std::size_t i : members) acc += detail::sq_dist(points[i], mean);
    return acc;
  };

  while (clusters.size() < k) {
    // pick the cluster with the largest inertia that can still be split
    double worst = -1.0;
    std::size_t target = clusters.size();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].size() < 2) continue;
      const double in = cluster_inertia(clusters[c]);
      if (in > worst) {
        worst = in;
        target = c;
      }
    }
    if (target == clusters.size())
      throw std::invalid_argument("bisecting_kmeans: cannot reach k clusters");

    PointSet sub;
    for (std::size_t i : clusters[target]) sub.push_back(points[i]);
    auto split = kmeans(sub, 2, rng.next_u64());
    std::vector<std::size_t> left, right;
    for (std::size_t i = 0; i < sub.size(); ++i)
      (split.labels[i] == 0 ? left : right).push_back(clusters[target][i]);
    clusters[target] = std::move(left);
    clusters.push_back(std::move(right));
  }

  ClusterResult out;
  out.labels.assign(points.size(), 0);
  out.centroids.assign(clusters.size(),
                       std::vector<double>(points[0].size(), 0.0));
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t i : clusters[c]) {
      out.labels[i] = static_cast<int>(c);
      for (std::size_t d = 0; d < points[0].size(); ++d)
        out.centroids[c][d] += points[i][d];
    }
    for (double& v : out.centroids[c])
      v /= static_cast<double>(clusters[c].size());
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    out.inertia += detail::sq_dist(points[i], out.centroids[out.labels[i]]);
  return out;
}

/// Flat-kernel mean shift: every point climbs to the mean of its bandwidth
/// ball; modes closer than bandwidth/2 merge; labels go to the nearest mode.
/// The number of clusters is emergent.
inline ClusterResult mean_shift(const PointSet& points, double bandwidth,
                                std::size_t max_iter = 300) {
  detail::check_points(points, "mean_shift");
  if (bandwidth <= 0.0)
    throw std::invalid_argument("mean_shift: bandwidth must be positive");
  const double bw2 = bandwidth * bandwidth;
  const std::size_t dim = points[0].size();

  PointSet shifted = points;
  for (auto& y : shifted) {
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      std::vector<double> mean(dim, 0.0);
      std::size_t count = 0;
      for (const auto& p : points) {
        if (detail::sq_dist(y, p) <= bw2) {
          for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
          ++count;
        }
      }
      for (double& v : mean) v /= static_cast<double>(count);
      const double move = detail::sq_dist(y, mean);
      y = std::move(mean);
      if (move < 1e-12) break;
    }
  }

  // merge modes within bandwidth/2
  ClusterResult out;
  const double merge2 = (bandwidth / 2.0) * (bandwidth / 2.0);
  for (const auto& y : shifted) {
    bool found = false;
    for (const auto& mode : out.centroids)
      if (detail::sq_dist(y, mode) <= merge2) {
        found = true;
        break;
      }
    if (!found) out.centroids.push_back(y);
  }

  out.labels.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_m = 0;
    for (std::size_t m = 0; m < out.centroids.size(); ++m) {
      const double d = detail::sq_dist(shifted[i], out.centroids[m]);
      if (d < best) {
        best = d;
        best_m = static_cast<int>(m);
      }
    }
    out.labels[i] = best_m;
    out.inertia += detail::sq_dist(points[i], out.centroids[best_m]);
  }
  return out;
}

inline double median_pairwise_distance(const PointSet& points) {
  detail::check_points(points, "median_pairwise_distance");
  std::vector<double> dists;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      dists.push_back(std::sqrt(detail::sq_dist(points[i], points[j])));
  if (dists.empty()) return 0.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t n = dists.size();
  return n % 2 == 1 ? dists[n / 2] : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
}

/// Mean silhouette over all points; singleton clusters contribute 0.
inline double silhouette_score(const PointSet& points,
                               const std::vector<int>& labels) {
  detail::check_points(points, "silhouette_score");
  if (labels.size() != points.size())
    throw std::invalid_argument("silhouette_score: label count mismatch");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) ++counts[l];

  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int own = labels[i];
    if (counts[own] <= 1) continue;  // silhouette 0
    std::vector<double> mean_dist(k, 0.0);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      mean_dist[labels[j]] += std::sqrt(detail::sq_dist(points[i], points[j]));
    }
    double a = mean_dist[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, mean_dist[c] / static_cast<double>(counts[c]));
    }
    if (!std::isfinite(b)) continue;  // single cluster overall
    const double denom = std::max(a, b);
    acc += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return acc / static_cast<double>(points.size());
}

/// Picks the candidate k with the best mean silhouette under k-means; ties
/// break toward the smaller k.
inline std::size_t select_k(const PointSet& points,
                            const std::vector<std::size_t>& candidates,
                            std::uint64_t seed) {
  detail::check_points(points, "select_k");
  if (candidates.empty())
    throw std::invalid_argument("select_k: empty candidate set");
  for (std::size_t k : candidates)
    if (k > points.size())
      throw std::invalid_argument("select_k: fewer points than candidate k");
  std::vector<std::size_t> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_k = sorted.front();
  for (std::size_t k : sorted) {
    if (k < 2) {
      if (sorted.size() == 1) return k;
      continue;  // silhouette undefined for k = 1
    }
    auto result = kmeans(points, k, seed);
    const double s = silhouette_score(points, result.labels);
    if (s > best_score + 1e-12) {
      best_score = s;
      best_k = k;
    }
  }
  return best_k;
}

inline std::size_t select_k(const PointSet& points, std::uint64_t seed) {
  return select_k(points, {2, 3, 4, 5, 6, 7, 8}, seed);
}

/// Per-dimension z-score, applied to embeddings before clustering.
inline PointSet standardize_points(const PointSet& points) {
  detail::check_points(points, "standardize_points");
  const std::size_t dim = points[0].size();
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  for (double& v : mean) v /= static_cast<double>(points.size());
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = p[d] - mean[d];
      sd[d] += c * c;
    }
  for (double& v : sd) {
    v = std::sqrt(v / static_cast<double>(points.size()));
    if (v < 1e-12) v = 1.0;
  }
  PointSet out = points;
  for (auto& p : out)
    for (std::size_t d = 0; d < dim; ++d) p[d] = (p[d] - mean[d]) / sd[d];
  return out;
}

}  // namespace crstc
