#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "abcmi/error.hpp"
#include "abcmi/parallel.hpp"
#include "abcmi/random.hpp"

namespace abcmi {

template <std::size_t Dim>
using Point = std::array<double, Dim>;

template <std::size_t Dim>
double squared_distance(const Point<Dim>& a, const Point<Dim>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < Dim; ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return d;
}

struct KMeansOptions {
  std::size_t k = 1;
  std::size_t restarts = 40;
  std::uint64_t seed = 42;
  std::size_t max_iterations = 300;
  unsigned threads = 1;
};

template <std::size_t Dim>
struct Clustering {
  std::vector<std::size_t> assignments;  // cluster per point
  std::vector<Point<Dim>> centroids;
  double inertia = 0.0;  // within-cluster sum of squared distances
  std::size_t iterations = 0;
  bool converged = false;
};

template <std::size_t Dim>
struct KMeansResult : Clustering<Dim> {
  std::size_t best_restart = 0;
  std::vector<double> restart_inertia;  // one entry per restart
};

namespace detail {

template <std::size_t Dim>
std::vector<Point<Dim>> cluster_means(std::span<const Point<Dim>> points,
                                      std::span<const std::size_t> assignments,
                                      std::size_t k) {
  std::vector<Point<Dim>> sums(k, Point<Dim>{});
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& s = sums[assignments[i]];
    for (std::size_t d = 0; d < Dim; ++d) s[d] += points[i][d];
    ++sizes[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < Dim; ++d)
      sums[c][d] /= static_cast<double>(sizes[c]);
  return sums;
}

// Nearest centroid; ties go to the lower cluster index.
template <std::size_t Dim>
void assign(std::span<const Point<Dim>> points,
            std::span<const Point<Dim>> centroids,
            std::vector<std::size_t>& assignments) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(points[i], centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignments[i] = best;
  }
}

// Every empty cluster takes over the point farthest from its own centroid,
// chosen among clusters that keep at least one member.
template <std::size_t Dim>
void repair_empty_clusters(std::span<const Point<Dim>> points,
                           std::vector<Point<Dim>>& centroids,
                           std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      const double d = squared_distance(points[i], centroids[assignments[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --sizes[assignments[far]];
    assignments[far] = c;
    sizes[c] = 1;
    centroids[c] = points[far];
  }
}

template <std::size_t Dim>
double inertia_of(std::span<const Point<Dim>> points,
                  std::span<const std::size_t> assignments,
                  std::span<const Point<Dim>> centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    total += squared_distance(points[i], centroids[assignments[i]]);
  return total;
}

}  // namespace detail

/// One Lloyd run from the given initial centroids. Stops when assignments no
/// longer change or after `max_iterations` updates. Every returned cluster
/// is non-empty.
template <std::size_t Dim>
Clustering<Dim> lloyd(std::span<const Point<Dim>> points,
                      std::vector<Point<Dim>> centroids,
                      std::size_t max_iterations = 300) {
  const std::size_t k = centroids.size();
  if (k == 0 || k > points.size())
    fail_infeasible("k-means: cannot form " + std::to_string(k) +
                    " clusters from " + std::to_string(points.size()) +
                    " points");
  Clustering<Dim> out;
  out.assignments.assign(points.size(), 0);
  detail::assign<Dim>(points, centroids, out.assignments);
  detail::repair_empty_clusters<Dim>(points, centroids, out.assignments);

  std::vector<std::size_t> next(points.size());
  while (out.iterations < max_iterations) {
    centroids = detail::cluster_means<Dim>(points, out.assignments, k);
    ++out.iterations;
    detail::assign<Dim>(points, centroids, next);
    detail::repair_empty_clusters<Dim>(points, centroids, next);
    if (next == out.assignments) {
      out.converged = true;
      break;
    }
    out.assignments.swap(next);
  }
  out.centroids = detail::cluster_means<Dim>(points, out.assignments, k);
  out.inertia = detail::inertia_of<Dim>(points, out.assignments, out.centroids);
  return out;
}

/// Restarted k-means. Restart r seeds its centroids with k distinct points
/// drawn uniformly using derive_seed(seed, r). The winner minimises
/// (inertia, restart index), so the result is independent of how restarts
/// are scheduled across threads.
template <std::size_t Dim>
KMeansResult<Dim> kmeans(std::span<const Point<Dim>> points,
                         const KMeansOptions& opt) {
  if (opt.k == 0) fail_validation("k-means: k must be at least 1");
  if (opt.k > points.size())
    fail_infeasible("k-means: k = " + std::to_string(opt.k) + " exceeds the " +
                    std::to_string(points.size()) + " available points");
  if (opt.restarts == 0) fail_validation("k-means: at least one restart required");

  std::vector<Clustering<Dim>> runs(opt.restarts);
  parallel_for(opt.restarts, opt.threads, [&](std::size_t r) {
    Rng rng(derive_seed(opt.seed, r));
    const auto picks = sample_without_replacement(rng, points.size(), opt.k);
    std::vector<Point<Dim>> init;
    init.reserve(opt.k);
    for (auto i : picks) init.push_back(points[i]);
    runs[r] = lloyd<Dim>(points, std::move(init), opt.max_iterations);
  });

  KMeansResult<Dim> best;
  std::size_t winner = 0;
  best.restart_inertia.reserve(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    best.restart_inertia.push_back(runs[r].inertia);
    if (runs[r].inertia < runs[winner].inertia) winner = r;
  }
  static_cast<Clustering<Dim>&>(best) = std::move(runs[winner]);
  best.best_restart = winner;
  return best;
}

}  // namespace abcmi
