#pragma once

// Naive reference implementations used as test oracles. They follow the
// textbook definitions directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

inline Matrix centroids(const Matrix& x, const std::vector<std::uint32_t>& labels, std::size_t k) {
  Matrix c(k, std::vector<double>(x[0].size(), 0.0));
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++count[labels[i]];
    for (std::size_t j = 0; j < x[i].size(); ++j) c[labels[i]][j] += x[i][j];
  }
  for (std::size_t q = 0; q < k; ++q) {
    for (auto& v : c[q]) v /= static_cast<double>(count[q]);
  }
  return c;
}

inline double silhouette(const Matrix& x, const std::vector<std::uint32_t>& labels, std::size_t k) {
  const std::size_t n = x.size();
  std::vector<std::size_t> count(k, 0);
  for (auto l : labels) ++count[l];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (count[labels[i]] == 1) continue;
    std::vector<double> sum(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum[labels[j]] += euclid(x[i], x[j]);
    }
    double a = sum[labels[i]] / static_cast<double>(count[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < k; ++q) {
      if (q != labels[i] && count[q] > 0) b = std::min(b, sum[q] / static_cast<double>(count[q]));
    }
    double m = std::max(a, b);
    total += m == 0.0 ? 0.0 : (b - a) / m;
  }
  return total / static_cast<double>(n);
}

inline double calinski_harabasz(const Matrix& x, const std::vector<std::uint32_t>& labels, std::size_t k) {
  const std::size_t n = x.size();
  const std::size_t d = x[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& p : x) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j] / static_cast<double>(n);
  }
  Matrix c = centroids(x, labels, k);
  std::vector<std::size_t> count(k, 0);
  for (auto l : labels) ++count[l];
  double between = 0.0;
  for (std::size_t q = 0; q < k; ++q) {
    double e = euclid(c[q], mean);
    between += static_cast<double>(count[q]) * e * e;
  }
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = euclid(x[i], c[labels[i]]);
    within += e * e;
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

inline double davies_bouldin(const Matrix& x, const std::vector<std::uint32_t>& labels, std::size_t k) {
  Matrix c = centroids(x, labels, k);
  std::vector<double> s(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    s[labels[i]] += euclid(x[i], c[labels[i]]);
    ++count[labels[i]];
  }
  for (std::size_t q = 0; q < k; ++q) s[q] /= static_cast<double>(count[q]);
  double total = 0.0;
  for (std::size_t q = 0; q < k; ++q) {
    double worst = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      if (r != q) worst = std::max(worst, (s[q] + s[r]) / euclid(c[q], c[r]));
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

inline int ring_distance(int a, int b) {
  int d = std::abs(a - b) % 12;
  return std::min(d, 12 - d);
}

// Peaks of a 12-month series: runs of equal values whose outside neighbours
// are both strictly lower, reported at the run's first month going forward
// in time; accepted tallest first (ties: smaller month number) subject to
// the separation rule.
inline std::vector<int> peaks(const double* v, int min_sep) {
  std::vector<std::pair<double, int>> candidates;
  bool flat = true;
  for (int i = 1; i < 12; ++i) flat = flat && v[i] == v[0];
  if (flat) return {};
  for (int i = 0; i < 12; ++i) {
    // i must be where a run begins: its predecessor differs.
    int prev = (i + 11) % 12;
    if (v[prev] == v[i]) continue;
    int end = i;
    while (v[(end + 1) % 12] == v[i]) end = (end + 1) % 12;
    int next = (end + 1) % 12;
    if (v[prev] < v[i] && v[next] < v[i]) candidates.emplace_back(v[i], i + 1);
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> accepted;
  for (const auto& [value, month] : candidates) {
    bool ok = true;
    for (int m : accepted) ok = ok && ring_distance(m, month) >= min_sep;
    if (ok) accepted.push_back(month);
  }
  return accepted;
}

} // namespace oracle
