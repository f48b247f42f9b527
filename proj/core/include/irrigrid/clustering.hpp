#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irrigrid {

/// Non-owning row-major view of n points in `dim` dimensions.
struct PointsView {
  std::span<const double> data;
  std::size_t dim = 0;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

double squared_distance(std::span<const double> a, std::span<const double> b);

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;          // k x dim, row-major
  std::vector<std::uint32_t> assignments; // one per point, in [0, k)
  double inertia = 0.0;
  std::vector<double> inertia_history;    // after each centroid update
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;

  std::span<const double> centroid(std::size_t c) const {
    return std::span<const double>(centroids).subspan(c * dim, dim);
  }
};

struct KMeansOptions {
  std::size_t max_iterations = 300;
};

/// Lloyd's algorithm from a k-means++ start drawn with `seed`. Stops when no
/// assignment changes or after max_iterations. A cluster left empty is
/// re-seeded with the point farthest from its current centroid. Throws
/// InvalidArgument when n < k or k == 0.
ClusterModel kmeans_fit(PointsView points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

/// Lowest-inertia model over `restarts` fits, each with a seed derived from
/// (seed, k, restart).
ClusterModel kmeans_best_of(PointsView points, std::size_t k, std::uint64_t seed, std::size_t restarts,
                            const KMeansOptions& options = {});

// Quality indices. Centroids are recomputed from the assignments, so any
// labelling can be scored, not only converged models.

/// Mean silhouette width. Points alone in their cluster score 0; empty
/// clusters are ignored. Throws UndefinedMetric when k < 2 or fewer than two
/// clusters have members.
double silhouette(PointsView points, std::span<const std::uint32_t> assignments, std::size_t k);

/// Between/within dispersion ratio. Returns +infinity when the within-cluster
/// dispersion is zero. Throws UndefinedMetric for k < 2 and InvalidModel for
/// an empty cluster.
double calinski_harabasz(PointsView points, std::span<const std::uint32_t> assignments, std::size_t k);

/// Mean worst-case similarity ratio. Throws UndefinedMetric for k < 2 and
/// InvalidModel for an empty cluster or two coincident centroids.
double davies_bouldin(PointsView points, std::span<const std::uint32_t> assignments, std::size_t k);

inline double silhouette(PointsView points, const ClusterModel& m) { return silhouette(points, m.assignments, m.k); }
inline double calinski_harabasz(PointsView points, const ClusterModel& m) {
  return calinski_harabasz(points, m.assignments, m.k);
}
inline double davies_bouldin(PointsView points, const ClusterModel& m) {
  return davies_bouldin(points, m.assignments, m.k);
}

struct ClusterQuality {
  double silhouette = 0.0;
  double calinski_harabasz = 0.0;
  double davies_bouldin = 0.0;
};

struct SelectionOptions {
  std::size_t k_lo = 2;
  std::size_t k_hi = 6;
  std::size_t restarts = 5;
  /// Silhouette is scored on a seeded uniform sample of this many points when
  /// n exceeds it.
  std::size_t silhouette_sample = 10'000;
  KMeansOptions kmeans;
};

struct KCandidate {
  std::size_t k = 0;
  double inertia = 0.0;
  std::optional<ClusterQuality> quality; // empty when an index was undefined
  std::string error;
};

struct ModelSelection {
  ClusterModel model;
  std::vector<KCandidate> candidates;
  std::size_t silhouette_sample_size = 0;
};

/// Fits every k in [k_lo, k_hi] and keeps the one with the highest
/// silhouette, then lowest Davies-Bouldin, then lowest k. Throws
/// InvalidArgument when k_lo < 2, k_lo > k_hi or n <= k_hi, and
/// UndefinedMetric when no k could be scored.
ModelSelection select_model(PointsView points, std::uint64_t seed, const SelectionOptions& options = {});

/// splitmix64 finaliser; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace irrigrid
