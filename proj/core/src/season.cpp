#include "irrigrid/season.hpp"

#include "irrigrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace irrigrid {

namespace {
constexpr int kMonths = 12;
int wrap(int i) { return ((i % kMonths) + kMonths) % kMonths; }
} // namespace

void HeuristicConfig::validate() const {
  if (!(ndvi_peak_threshold > 0.0) || !(precip_threshold_mm > 0.0) || !(cold_precip_threshold_mm > 0.0) ||
      !(cold_temp_c > 0.0) || min_peak_separation_months <= 0) {
    throw InvalidArgument("heuristic thresholds must all be positive");
  }
  if (!(cold_precip_threshold_mm < precip_threshold_mm)) {
    throw InvalidArgument("cold precipitation threshold must be below the default precipitation threshold");
  }
}

std::string_view to_string(Verdict v) { return v == Verdict::Irrigated ? "irrigated" : "rainfed"; }

std::string_view to_string(Overall o) {
  switch (o) {
  case Overall::Rainfed: return "rainfed";
  case Overall::Irrigated: return "irrigated";
  case Overall::NotCultivated: return "not_cultivated";
  }
  return "unknown";
}

int month_distance(int a, int b) {
  int d = std::abs(a - b) % kMonths;
  return std::min(d, kMonths - d);
}

std::vector<int> detect_peaks(std::span<const double, 12> v, const HeuristicConfig& config) {
  struct Candidate {
    int month; // 0-based
    double value;
  };
  std::vector<Candidate> candidates;

  // Find a month whose predecessor differs; without one the series is flat.
  int start = -1;
  for (int i = 0; i < kMonths; ++i) {
    if (v[i] != v[wrap(i - 1)]) {
      start = i;
      break;
    }
  }
  if (start < 0) return {};

  // Walk maximal runs of equal values around the ring beginning at `start`.
  int i = start;
  int visited = 0;
  while (visited < kMonths) {
    int run_start = i;
    int len = 1;
    while (len < kMonths && v[wrap(run_start + len)] == v[run_start]) ++len;
    double before = v[wrap(run_start - 1)];
    double after = v[wrap(run_start + len)];
    if (v[run_start] > before && v[run_start] > after) candidates.push_back({run_start, v[run_start]});
    visited += len;
    i = wrap(run_start + len);
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.value != b.value ? a.value > b.value : a.month < b.month;
  });

  std::vector<int> accepted;
  for (const auto& c : candidates) {
    bool clear = std::all_of(accepted.begin(), accepted.end(), [&](int m) {
      return month_distance(m - 1, c.month) >= config.min_peak_separation_months;
    });
    if (clear) accepted.push_back(c.month + 1);
  }
  return accepted;
}

CropSeason build_season(int peak_month, std::span<const double, 12> centroid, std::span<const double, 12> precip_mm,
                        std::span<const double, 12> temp_c) {
  if (peak_month < 1 || peak_month > kMonths) {
    throw InvalidArgument("peak month " + std::to_string(peak_month) + " outside 1..12");
  }
  int at = peak_month - 1;
  int before = wrap(at - 1);
  CropSeason s;
  s.peak_month = peak_month;
  s.peak_ndvi = centroid[at];
  s.mean_precip_mm = (precip_mm[before] + precip_mm[at]) / 2.0;
  s.mean_temp_c = (temp_c[before] + temp_c[at]) / 2.0;
  return s;
}

SeasonVerdict label_season(const CropSeason& season, const HeuristicConfig& config) {
  SeasonVerdict out;
  bool cultivated = season.peak_ndvi > config.ndvi_peak_threshold;
  double water_need =
      season.mean_temp_c < config.cold_temp_c ? config.cold_precip_threshold_mm : config.precip_threshold_mm;
  bool dry = season.mean_precip_mm < water_need;
  out.verdict = cultivated && dry ? Verdict::Irrigated : Verdict::Rainfed;
  out.not_cultivated = !cultivated;
  return out;
}

ClusterLabel label_cluster(std::span<const double, 12> centroid, std::span<const double, 12> precip_mm,
                           std::span<const double, 12> temp_c, const HeuristicConfig& config,
                           std::size_t cluster_index) {
  ClusterLabel label;
  label.cluster = cluster_index;
  bool any_cultivated = false;
  bool any_irrigated = false;
  for (int month : detect_peaks(centroid, config)) {
    LabeledSeason ls;
    ls.season = build_season(month, centroid, precip_mm, temp_c);
    ls.verdict = label_season(ls.season, config);
    any_cultivated = any_cultivated || !ls.verdict.not_cultivated;
    any_irrigated = any_irrigated || ls.verdict.verdict == Verdict::Irrigated;
    label.seasons.push_back(ls);
  }
  label.overall = any_irrigated ? Overall::Irrigated : any_cultivated ? Overall::Rainfed : Overall::NotCultivated;
  return label;
}

} // namespace irrigrid
