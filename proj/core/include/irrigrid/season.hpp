#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace irrigrid {

/// Thresholds of the crop-season irrigation rule.
struct HeuristicConfig {
  double ndvi_peak_threshold = 0.3;
  double precip_threshold_mm = 100.0;
  double cold_precip_threshold_mm = 85.0;
  double cold_temp_c = 15.0;
  int min_peak_separation_months = 3;

  /// Throws InvalidArgument unless every threshold is positive and the cold
  /// precipitation threshold is below the default one.
  void validate() const;
};

enum class Verdict { Rainfed, Irrigated };
enum class Overall { Rainfed, Irrigated, NotCultivated };

std::string_view to_string(Verdict v);
std::string_view to_string(Overall o);

struct CropSeason {
  int peak_month = 1; // 1..12
  double peak_ndvi = 0.0;
  double mean_precip_mm = 0.0; // month before the peak and the peak month
  double mean_temp_c = 0.0;    // same two months
};

struct SeasonVerdict {
  Verdict verdict = Verdict::Rainfed;
  bool not_cultivated = false; // peak did not exceed the NDVI threshold
};

struct LabeledSeason {
  CropSeason season;
  SeasonVerdict verdict;
};

struct ClusterLabel {
  std::size_t cluster = 0;
  std::vector<LabeledSeason> seasons;
  Overall overall = Overall::NotCultivated;
};

/// Circular distance between months on a 12-month ring.
int month_distance(int a, int b);

/// Crop-season peaks of a 12-month NDVI series, as months 1..12 in
/// acceptance order (tallest first).
///
/// A candidate is a circular local maximum: a run of equal values whose
/// circular neighbours on both sides are strictly lower, reported at the
/// first month of the run in circular order. Candidates are accepted from
/// the tallest down (equal heights: lower month number first) and dropped if
/// they sit closer than min_peak_separation_months to an accepted peak.
std::vector<int> detect_peaks(std::span<const double, 12> centroid, const HeuristicConfig& config);

/// Season around `peak_month`, averaging precipitation and temperature over
/// the peak month and the month before it (January wraps to December).
CropSeason build_season(int peak_month, std::span<const double, 12> centroid, std::span<const double, 12> precip_mm,
                        std::span<const double, 12> temp_c);

/// Irrigated iff the peak exceeds the NDVI threshold and mean precipitation
/// is below the water need (the cold threshold applies when the mean
/// temperature is below cold_temp_c). Both comparisons are strict.
SeasonVerdict label_season(const CropSeason& season, const HeuristicConfig& config);

ClusterLabel label_cluster(std::span<const double, 12> centroid, std::span<const double, 12> precip_mm,
                           std::span<const double, 12> temp_c, const HeuristicConfig& config,
                           std::size_t cluster_index = 0);

} // namespace irrigrid
