#include "irrigrid/clustering.hpp"

#include "irrigrid/error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace irrigrid {

namespace {

using detail::Rng;

std::vector<double> kmeanspp_init(PointsView points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  std::vector<double> centroids;
  centroids.reserve(k * dim);

  auto push = [&](std::size_t i) {
    auto r = points.row(i);
    centroids.insert(centroids.end(), r.begin(), r.end());
  };

  push(rng.index(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(points.row(i), std::span<const double>(centroids).subspan(0, dim));
  }

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = rng.index(n);
    } else {
      double target = rng.uniform() * total;
      double cum = 0.0;
      chosen = n;
      std::size_t last_positive = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        last_positive = i;
        cum += d2[i];
        if (cum > target) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) chosen = last_positive;
    }
    push(chosen);
    auto newest = std::span<const double>(centroids).subspan(c * dim, dim);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), newest));
  }
  return centroids;
}

void update_centroids(PointsView points, const std::vector<std::uint32_t>& assign, std::size_t k,
                      std::vector<double>& centroids, std::vector<std::size_t>& counts) {
  const std::size_t dim = points.dim;
  std::vector<double> sums(k * dim, 0.0);
  counts.assign(k, 0);
  // Fixed point order keeps the sums bit-stable.
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto r = points.row(i);
    double* s = sums.data() + assign[i] * dim;
    for (std::size_t d = 0; d < dim; ++d) s[d] += r[d];
    ++counts[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
    }
  }
}

double total_inertia(PointsView points, const std::vector<std::uint32_t>& assign, const std::vector<double>& cents) {
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum += squared_distance(points.row(i), std::span<const double>(cents).subspan(assign[i] * points.dim, points.dim));
  }
  return sum;
}

// Per-cluster member counts and means; InvalidModel if any cluster is empty.
void label_centroids(PointsView points, std::span<const std::uint32_t> assign, std::size_t k,
                     std::vector<double>& cents, std::vector<std::size_t>& counts) {
  if (assign.size() != points.size()) throw InvalidArgument("assignment count differs from point count");
  const std::size_t dim = points.dim;
  cents.assign(k * dim, 0.0);
  counts.assign(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (assign[i] >= k) throw InvalidArgument("assignment out of range");
    auto r = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) cents[assign[i] * dim + d] += r[d];
    ++counts[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) throw InvalidModel("cluster " + std::to_string(c) + " is empty");
    for (std::size_t d = 0; d < dim; ++d) cents[c * dim + d] /= static_cast<double>(counts[c]);
  }
}

void require_k(std::size_t k, const char* metric) {
  if (k < 2) throw UndefinedMetric(std::string(metric) + " is undefined for k < 2");
}

} // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2) + b * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

ClusterModel kmeans_fit(PointsView points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  if (dim == 0) throw InvalidArgument("kmeans: points have zero dimensions");
  if (k == 0) throw InvalidArgument("kmeans: k must be >= 1");
  if (n < k) {
    throw InvalidArgument("kmeans: " + std::to_string(n) + " points cannot form " + std::to_string(k) + " clusters");
  }
  for (double v : points.data) {
    if (!std::isfinite(v)) throw InvalidArgument("kmeans: points contain nodata");
  }

  Rng rng(seed);
  ClusterModel model;
  model.k = k;
  model.dim = dim;
  model.seed = seed;
  model.centroids = kmeanspp_init(points, k, rng);
  model.assignments.assign(n, 0);

  std::vector<std::size_t> counts(k, 0);
  std::vector<double> dist(n, 0.0);
  auto centroid = [&](std::size_t c) { return std::span<const double>(model.centroids).subspan(c * dim, dim); };

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = points.row(i);
      std::uint32_t best = iter == 0 ? 0 : model.assignments[i];
      double best_d = squared_distance(r, centroid(best));
      for (std::uint32_t c = 0; c < k; ++c) {
        if (c == best) continue;
        double d = squared_distance(r, centroid(c));
        // Keep the current cluster unless another is strictly closer; on the
        // first pass prefer the lowest index among ties.
        if (d < best_d) {
          best = c;
          best_d = d;
        }
      }
      if (iter == 0 || best != model.assignments[i]) ++changed;
      model.assignments[i] = best;
      dist[i] = best_d;
    }
    if (iter > 0 && changed == 0) {
      model.converged = true;
      break;
    }
    model.iterations = iter + 1;

    counts.assign(k, 0);
    for (auto a : model.assignments) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[model.assignments[i]] <= 1) continue;
        if (dist[i] > far_d) {
          far = i;
          far_d = dist[i];
        }
      }
      --counts[model.assignments[far]];
      model.assignments[far] = static_cast<std::uint32_t>(c);
      counts[c] = 1;
      dist[far] = 0.0;
      auto r = points.row(far);
      std::copy(r.begin(), r.end(), model.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }

    update_centroids(points, model.assignments, k, model.centroids, counts);
    model.inertia_history.push_back(total_inertia(points, model.assignments, model.centroids));
  }
  model.inertia = model.inertia_history.empty() ? total_inertia(points, model.assignments, model.centroids)
                                                : model.inertia_history.back();
  return model;
}

ClusterModel kmeans_best_of(PointsView points, std::size_t k, std::uint64_t seed, std::size_t restarts,
                            const KMeansOptions& options) {
  if (restarts == 0) throw InvalidArgument("kmeans: restarts must be >= 1");
  ClusterModel best;
  for (std::size_t r = 0; r < restarts; ++r) {
    ClusterModel m = kmeans_fit(points, k, mix_seed(mix_seed(seed, k), r), options);
    if (r == 0 || m.inertia < best.inertia) best = std::move(m);
  }
  return best;
}

double silhouette(PointsView points, std::span<const std::uint32_t> assignments, std::size_t k) {
  require_k(k, "silhouette");
  const std::size_t n = points.size();
  if (assignments.size() != n) throw InvalidArgument("assignment count differs from point count");
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignments) {
    if (a >= k) throw InvalidArgument("assignment out of range");
    ++counts[a];
  }
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw UndefinedMetric("silhouette needs at least two non-empty clusters");
  }

  // sums[i*k + c] = total distance from point i to members of cluster c.
  std::vector<double> sums(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto ri = points.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = std::sqrt(squared_distance(ri, points.row(j)));
      sums[i * k + assignments[j]] += d;
      sums[j * k + assignments[i]] += d;
    }
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t own = assignments[i];
    if (counts[own] <= 1) continue;
    double a = sums[i * k + own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, sums[i * k + c] / static_cast<double>(counts[c]));
    }
    double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double calinski_harabasz(PointsView points, std::span<const std::uint32_t> assignments, std::size_t k) {
  require_k(k, "Calinski-Harabasz");
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  std::vector<double> cents;
  std::vector<std::size_t> counts;
  label_centroids(points, assignments, k, cents, counts);

  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) mean[d] += r[d];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  double between = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    between += static_cast<double>(counts[c]) *
               squared_distance(std::span<const double>(cents).subspan(c * dim, dim), mean);
  }
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    within += squared_distance(points.row(i), std::span<const double>(cents).subspan(assignments[i] * dim, dim));
  }
  if (within == 0.0 || n == k) return std::numeric_limits<double>::infinity();
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

double davies_bouldin(PointsView points, std::span<const std::uint32_t> assignments, std::size_t k) {
  require_k(k, "Davies-Bouldin");
  const std::size_t dim = points.dim;
  std::vector<double> cents;
  std::vector<std::size_t> counts;
  label_centroids(points, assignments, k, cents, counts);
  auto centroid = [&](std::size_t c) { return std::span<const double>(cents).subspan(c * dim, dim); };

  std::vector<double> scatter(k, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    scatter[assignments[i]] += std::sqrt(squared_distance(points.row(i), centroid(assignments[i])));
  }
  for (std::size_t c = 0; c < k; ++c) scatter[c] /= static_cast<double>(counts[c]);

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double d = std::sqrt(squared_distance(centroid(i), centroid(j)));
      if (d == 0.0) {
        throw InvalidModel("clusters " + std::to_string(i) + " and " + std::to_string(j) +
                           " have coincident centroids");
      }
      worst = std::max(worst, (scatter[i] + scatter[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

namespace {

// Number of distinct rows, counting no further than `cap`.
std::size_t distinct_points(PointsView points, std::size_t cap) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = points.row(a);
    auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t count = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size() && count < cap; ++i) {
    if (less(idx[i - 1], idx[i])) ++count;
  }
  return count;
}

} // namespace

ModelSelection select_model(PointsView points, std::uint64_t seed, const SelectionOptions& options) {
  const std::size_t n = points.size();
  if (options.k_lo < 2) throw InvalidArgument("select_model: k_lo must be >= 2");
  if (options.k_lo > options.k_hi) throw InvalidArgument("select_model: k_lo > k_hi");
  if (n <= options.k_hi) {
    throw InvalidArgument("select_model: need more than " + std::to_string(options.k_hi) + " points, have " +
                          std::to_string(n));
  }

  // Silhouette subsample, shared by every k so scores stay comparable.
  std::vector<std::size_t> sample;
  if (n > options.silhouette_sample) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x5a3b1e));
    for (std::size_t i = 0; i < options.silhouette_sample; ++i) {
      std::swap(idx[i], idx[i + rng.index(n - i)]);
    }
    sample.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(options.silhouette_sample));
    std::sort(sample.begin(), sample.end());
  }
  std::vector<double> sample_points;
  if (!sample.empty()) {
    sample_points.reserve(sample.size() * points.dim);
    for (auto i : sample) {
      auto r = points.row(i);
      sample_points.insert(sample_points.end(), r.begin(), r.end());
    }
  }

  const std::size_t distinct = distinct_points(points, options.k_hi + 1);

  ModelSelection out;
  out.silhouette_sample_size = sample.empty() ? n : sample.size();
  std::optional<std::size_t> best_index;
  std::vector<ClusterModel> models;

  for (std::size_t k = options.k_lo; k <= options.k_hi; ++k) {
    ClusterModel m = kmeans_best_of(points, k, seed, options.restarts, options.kmeans);
    KCandidate cand;
    cand.k = k;
    cand.inertia = m.inertia;
    try {
      if (distinct < k) {
        throw UndefinedMetric("only " + std::to_string(distinct) + " distinct points for k = " + std::to_string(k));
      }
      ClusterQuality q;
      q.davies_bouldin = davies_bouldin(points, m);
      q.calinski_harabasz = calinski_harabasz(points, m);
      if (sample.empty()) {
        q.silhouette = silhouette(points, m);
      } else {
        std::vector<std::uint32_t> sample_assign;
        sample_assign.reserve(sample.size());
        for (auto i : sample) sample_assign.push_back(m.assignments[i]);
        q.silhouette = silhouette(PointsView{sample_points, points.dim}, sample_assign, k);
      }
      cand.quality = q;
    } catch (const UndefinedMetric& e) {
      cand.error = e.what();
    } catch (const InvalidModel& e) {
      cand.error = e.what();
    }

    if (cand.quality) {
      bool better = !best_index.has_value();
      if (!better) {
        const auto& bq = *out.candidates[*best_index].quality;
        const auto& q = *cand.quality;
        better = q.silhouette > bq.silhouette ||
                 (q.silhouette == bq.silhouette && q.davies_bouldin < bq.davies_bouldin);
      }
      if (better) best_index = out.candidates.size();
    }
    out.candidates.push_back(std::move(cand));
    models.push_back(std::move(m));
  }

  if (!best_index) {
    std::string why = "model selection failed: no k in [" + std::to_string(options.k_lo) + "," +
                      std::to_string(options.k_hi) + "] has defined quality indices";
    if (!out.candidates.empty()) why += " (" + out.candidates.front().error + ")";
    throw UndefinedMetric(why);
  }
  out.model = std::move(models[*best_index]);
  return out;
}

} // namespace irrigrid
