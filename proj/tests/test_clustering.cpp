#include "irrigrid/clustering.hpp"
#include "irrigrid/error.hpp"

#include "oracles/brute_force.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <map>
#include <numeric>
#include <set>

using namespace irrigrid;

namespace {

struct Data {
  std::vector<double> flat;
  std::size_t dim;
  std::vector<std::uint32_t> truth;

  PointsView view() const { return PointsView{flat, dim}; }
  oracle::Matrix matrix() const {
    oracle::Matrix m;
    for (std::size_t i = 0; i < flat.size() / dim; ++i) {
      m.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i * dim),
                     flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }
    return m;
  }
};

// Blobs of `per` points, centers 10 apart along successive axes, spread 0.1.
Data blobs(std::size_t count, std::size_t per, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  Data d{{}, dim, {}};
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t j = 0; j < dim; ++j) d.flat.push_back((j == b ? 10.0 : 0.0) + noise(rng));
      d.truth.push_back(static_cast<std::uint32_t>(b));
    }
  }
  return d;
}

// True if two labellings induce the same partition.
bool same_partition(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::map<std::uint32_t, std::uint32_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, new_x] = ab.emplace(a[i], b[i]);
    auto [y, new_y] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

} // namespace

TEST_CASE("kmeans_fit degenerate k") {
  std::vector<double> pts{0, 0, 2, 0, 4, 6, 10, 2};
  PointsView v{pts, 2};
  auto m1 = kmeans_fit(v, 1, 7);
  CHECK(m1.centroids[0] == doctest::Approx(4.0));
  CHECK(m1.centroids[1] == doctest::Approx(2.0));
  for (auto a : m1.assignments) CHECK(a == 0);

  auto m4 = kmeans_fit(v, 4, 7);
  CHECK(m4.inertia == 0.0);
  std::set<std::uint32_t> used(m4.assignments.begin(), m4.assignments.end());
  CHECK(used.size() == 4);

  CHECK_THROWS_AS(kmeans_fit(v, 5, 7), InvalidArgument);
  CHECK_THROWS_AS(kmeans_fit(v, 0, 7), InvalidArgument);
}

TEST_CASE("kmeans_fit recovers two blobs exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = blobs(2, 20, 12, 100 + seed);
    auto m = kmeans_fit(d.view(), 2, seed);
    // Oracle: nearest true blob center.
    std::vector<std::uint32_t> nearest;
    for (std::size_t i = 0; i < 40; ++i) {
      auto row = d.view().row(i);
      double d0 = 0, d1 = 0;
      for (std::size_t j = 0; j < 12; ++j) {
        d0 += std::pow(row[j] - (j == 0 ? 10.0 : 0.0), 2);
        d1 += std::pow(row[j] - (j == 1 ? 10.0 : 0.0), 2);
      }
      nearest.push_back(d0 < d1 ? 0 : 1);
    }
    CHECK(nearest == d.truth);
    CHECK(same_partition(m.assignments, nearest));
  }
}

TEST_CASE("kmeans_fit is deterministic and monotone") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> pts(60 * 12);
    for (auto& x : pts) x = u(rng);
    PointsView v{pts, 12};
    std::size_t k = 2 + t % 5;
    auto a = kmeans_fit(v, k, t);
    auto b = kmeans_fit(v, k, t);
    CHECK(a.centroids == b.centroids);
    CHECK(a.assignments == b.assignments);
    CHECK(a.inertia_history == b.inertia_history);
    REQUIRE_FALSE(a.inertia_history.empty());
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
      CHECK(a.inertia_history[i] <= a.inertia_history[i - 1]);
    }
    CHECK(a.inertia >= 0.0);
    for (auto x : a.assignments) CHECK(x < k);
    if (a.converged) {
      // Centroids are the means of their members.
      oracle::Matrix m;
      for (std::size_t i = 0; i < v.size(); ++i) m.emplace_back(v.row(i).begin(), v.row(i).end());
      auto c = oracle::centroids(m, a.assignments, k);
      for (std::size_t q = 0; q < k; ++q) {
        for (std::size_t j = 0; j < 12; ++j) CHECK(a.centroid(q)[j] == doctest::Approx(c[q][j]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("kmeans_fit is permutation invariant on separated data") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = blobs(3, 15, 12, 300 + seed);
    auto m = kmeans_fit(d.view(), 3, seed);
    std::vector<std::size_t> perm(45);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled;
    for (auto p : perm) shuffled.insert(shuffled.end(), d.view().row(p).begin(), d.view().row(p).end());
    auto s = kmeans_fit(PointsView{shuffled, 12}, 3, seed);
    CHECK(s.inertia == doctest::Approx(m.inertia).epsilon(1e-9));
    std::vector<std::uint32_t> back(45);
    for (std::size_t i = 0; i < 45; ++i) back[perm[i]] = s.assignments[i];
    CHECK(same_partition(back, m.assignments));
    std::multiset<std::vector<double>> cm, cs;
    for (std::size_t q = 0; q < 3; ++q) {
      std::vector<double> a(m.centroid(q).begin(), m.centroid(q).end());
      std::vector<double> b(s.centroid(q).begin(), s.centroid(q).end());
      for (auto& x : a) x = std::round(x * 1e9) / 1e9;
      for (auto& x : b) x = std::round(x * 1e9) / 1e9;
      cm.insert(a);
      cs.insert(b);
    }
    CHECK(cm == cs);
  }
}

TEST_CASE("kmeans_best_of keeps the lowest inertia") {
  auto d = blobs(3, 10, 4, 9);
  auto best = kmeans_best_of(d.view(), 3, 5, 5);
  for (std::size_t r = 0; r < 5; ++r) {
    auto one = kmeans_fit(d.view(), 3, mix_seed(mix_seed(5, 3), r));
    CHECK(best.inertia <= one.inertia);
  }
}

TEST_CASE("metric fixtures frozen from the brute-force script") {
  std::vector<double> square{0, 0, 0, 1, 1, 0, 1, 1};
  std::vector<std::uint32_t> sl{0, 0, 1, 1};
  PointsView sv{square, 2};
  CHECK(silhouette(sv, sl, 2) == doctest::Approx(0.17157287525380985).epsilon(1e-12));
  CHECK(silhouette(sv, sl, 2) == doctest::Approx(3.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(calinski_harabasz(sv, sl, 2) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(davies_bouldin(sv, sl, 2) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> six{0, 0, 1, 0, 0, 1, 4, 4, 6, 4, 5, 7};
  std::vector<std::uint32_t> l6{0, 0, 0, 1, 1, 1};
  PointsView v6{six, 2};
  CHECK(silhouette(v6, l6, 2) == doctest::Approx(0.704247585487351).epsilon(1e-12));
  CHECK(calinski_harabasz(v6, l6, 2) == doctest::Approx(27.999999999999996).epsilon(1e-12));
  CHECK(davies_bouldin(v6, l6, 2) == doctest::Approx(0.34297424636399193).epsilon(1e-12));
}

TEST_CASE("coincident clusters") {
  std::vector<double> pts{0, 0, 0, 0, 0, 0, 9, 9, 9, 9};
  std::vector<std::uint32_t> l{0, 0, 0, 1, 1};
  PointsView v{pts, 2};
  CHECK(silhouette(v, l, 2) == 1.0);
  CHECK(davies_bouldin(v, l, 2) == 0.0);
  CHECK(std::isinf(calinski_harabasz(v, l, 2)));

  std::vector<std::uint32_t> same_place{0, 0, 1, 1, 1};
  std::vector<double> clash{0, 0, 1, 1, 0, 0, 1, 1, 0.5, 0.5};
  CHECK_THROWS_AS(davies_bouldin(PointsView{clash, 2}, std::vector<std::uint32_t>{0, 0, 1, 1, 0}, 2), InvalidModel);

  CHECK_THROWS_AS(silhouette(v, l, 1), UndefinedMetric);
  CHECK_THROWS_AS(calinski_harabasz(v, l, 1), UndefinedMetric);
  CHECK_THROWS_AS(davies_bouldin(v, l, 1), UndefinedMetric);
  CHECK_THROWS_AS(silhouette(v, std::vector<std::uint32_t>(5, 0), 2), UndefinedMetric);
  CHECK_THROWS_AS(calinski_harabasz(v, same_place, 3), InvalidModel);
}

TEST_CASE("random labels on one blob have silhouette near zero") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> pts(200 * 12);
  for (auto& x : pts) x = n(rng);
  std::vector<std::uint32_t> labels(200);
  for (std::size_t i = 0; i < 200; ++i) labels[i] = static_cast<std::uint32_t>(i % 2);
  PointsView v{pts, 12};
  double s = silhouette(v, labels, 2);
  CHECK(s < 0.2);
  oracle::Matrix m;
  for (std::size_t i = 0; i < 200; ++i) m.emplace_back(v.row(i).begin(), v.row(i).end());
  CHECK(s == doctest::Approx(oracle::silhouette(m, labels, 2)).epsilon(1e-12));
}

TEST_CASE("metrics agree with the brute-force oracle") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> kd(2, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::size_t k = kd(rng);
    std::size_t n = std::uniform_int_distribution<std::size_t>(k, 50)(rng);
    std::size_t dim = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    std::vector<double> pts(n * dim);
    for (auto& x : pts) x = u(rng);
    std::vector<std::uint32_t> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<std::uint32_t>(i < k ? i : rng() % k);
    PointsView v{pts, dim};
    oracle::Matrix m;
    for (std::size_t i = 0; i < n; ++i) m.emplace_back(v.row(i).begin(), v.row(i).end());
    CHECK(std::abs(silhouette(v, l, k) - oracle::silhouette(m, l, k)) <= 1e-9);
    double ch = calinski_harabasz(v, l, k);
    double och = oracle::calinski_harabasz(m, l, k);
    if (std::isinf(och)) {
      CHECK(std::isinf(ch));
    } else {
      CHECK(std::abs(ch - och) <= 1e-9 * std::max(1.0, std::abs(och)));
    }
    CHECK(std::abs(davies_bouldin(v, l, k) - oracle::davies_bouldin(m, l, k)) <= 1e-9);
  }
}

TEST_CASE("select_model picks the blob count") {
  SelectionOptions opt;
  opt.k_lo = 2;
  opt.k_hi = 5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto two = blobs(2, 20, 12, 500 + seed);
    auto s2 = select_model(two.view(), seed, opt);
    CHECK(s2.model.k == 2);
    CHECK(same_partition(s2.model.assignments, two.truth));
    CHECK(s2.candidates.size() == 4);

    auto three = blobs(3, 20, 12, 600 + seed);
    auto s3 = select_model(three.view(), seed, opt);
    CHECK(s3.model.k == 3);
    CHECK(same_partition(s3.model.assignments, three.truth));
  }
}

TEST_CASE("select_model on identical points fails") {
  std::vector<double> pts(10 * 12, 0.4);
  CHECK_THROWS_AS(select_model(PointsView{pts, 12}, 1), UndefinedMetric);

  std::vector<double> few(4 * 12, 0.1);
  CHECK_THROWS_AS(select_model(PointsView{few, 12}, 1), InvalidArgument);
  SelectionOptions bad;
  bad.k_lo = 1;
  auto d = blobs(2, 20, 12, 1);
  CHECK_THROWS_AS(select_model(d.view(), 1, bad), InvalidArgument);
}

TEST_CASE("select_model subsamples silhouette on large inputs") {
  auto d = blobs(2, 600, 12, 77);
  SelectionOptions opt;
  opt.k_hi = 3;
  opt.silhouette_sample = 500;
  auto s = select_model(d.view(), 3, opt);
  CHECK(s.silhouette_sample_size == 500);
  CHECK(s.model.k == 2);
  auto again = select_model(d.view(), 3, opt);
  CHECK(again.model.assignments == s.model.assignments);
  CHECK(again.candidates[0].quality->silhouette == s.candidates[0].quality->silhouette);
}
