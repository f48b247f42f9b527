#pragma once

#include "irrigrid/ingest.hpp"
#include "irrigrid/pipeline.hpp"
#include "irrigrid/raster.hpp"
#include "irrigrid/season.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irrigrid {

// --- shifted-region consistency ---------------------------------------------

struct Agreement {
  std::size_t comparisons = 0;
  std::size_t agreements = 0;

  std::optional<double> fraction() const {
    if (comparisons == 0) return std::nullopt;
    return static_cast<double>(agreements) / static_cast<double>(comparisons);
  }
};

/// Binary label of a prediction pixel (NOT_CULTIVATED folds into RAINFED);
/// empty for NON_CROPLAND and nodata.
std::optional<Verdict> binary_label(float code);

/// Pixelwise agreement of two LABEL rasters on a shared lattice, over pixels
/// where both carry a binary label. Throws AlignmentError if the grids do not
/// share a pixel lattice.
Agreement compare_predictions(const RasterGrid& a, const RasterGrid& b);

struct ShiftAgreement {
  int dx = 0; // -1, 0, +1 thirds of the aoi width, east positive
  int dy = 0; // -1, 0, +1 thirds of the aoi height, north positive
  std::int64_t dx_pixels = 0;
  std::int64_t dy_pixels = 0;
  double dx_degrees = 0.0;
  double dy_degrees = 0.0;
  Agreement agreement;
  std::size_t failed_tiles = 0;
};

struct ConsistencyReport {
  std::vector<ShiftAgreement> shifts; // 8 entries, north-west to south-east
  Agreement overall;
  std::size_t base_failed_tiles = 0;
};

/// Offsets in thirds of the aoi edge for the eight translated regions.
std::array<std::pair<int, int>, 8> consistency_shifts();

/// Predicts `aoi` and the eight regions translated by a third of its edge
/// (diagonals included), each offset snapped to the NDVI pixel lattice, and
/// counts label agreement on the overlaps. Throws InvalidArgument when the
/// inputs do not cover the aoi plus a one-third margin.
ConsistencyReport consistency_check(const GeoBox& aoi, const RegionInputs& inputs, const PipelineConfig& config,
                                    std::uint64_t seed, std::size_t workers = 1);

// --- point accuracy ---------------------------------------------------------

struct EvalPoint {
  double lon = 0.0;
  double lat = 0.0;
  Verdict truth = Verdict::Rainfed;
};

struct PointOutcome {
  EvalPoint point;
  std::optional<Verdict> predicted; // empty when unscorable
  std::string reason;               // why a point is unscorable
};

struct AccuracyReport {
  std::size_t scored = 0;
  std::size_t matches = 0;
  std::size_t unscorable = 0;
  /// confusion[truth][predicted], index 0 = rainfed, 1 = irrigated.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::vector<PointOutcome> outcomes;

  std::optional<double> accuracy() const {
    if (scored == 0) return std::nullopt;
    return static_cast<double>(matches) / static_cast<double>(scored);
  }
};

/// Scores each point against the LABEL pixel containing it. Points outside
/// the raster or on NON_CROPLAND/nodata pixels are unscorable and excluded
/// from the denominator.
AccuracyReport evaluate_points(const RasterGrid& labels, std::span<const EvalPoint> points);

/// CSV with header `lon,lat,label`, label in {irrigated, rainfed}.
std::vector<EvalPoint> read_points_csv(std::istream& in);
std::vector<EvalPoint> read_points_csv(const std::filesystem::path& path);
std::string write_points_csv(std::span<const EvalPoint> points);

// --- synthetic scenes -------------------------------------------------------

struct SynthRegion {
  GeoBox box;
  MaskClass land = MaskClass::Cropland;
  bool irrigated = false;
  int peak_month = 7;
  double peak_ndvi = 0.6;
  double base_ndvi = 0.1;
  double width_months = 1.0; // gaussian falloff of the NDVI bump
  std::optional<std::array<double, 12>> precip_mm;
  std::optional<std::array<double, 12>> temp_c;
};

struct SynthScene {
  GeoBox extent;
  double pixel_size = 0.0025;
  double noise_sigma = 0.0;
  std::uint64_t seed = 42;
  MaskClass background = MaskClass::NonCropland;
  double background_ndvi = 0.1;
  double baseline_precip_mm = 60.0;
  double dry_precip_mm = 20.0;
  double wet_precip_mm = 150.0;
  double temp_c = 25.0;
  std::vector<SynthRegion> regions;
};

struct SynthWorld {
  MonthlyStack ndvi;
  CroplandMask mask;
  MonthlyStack precip;
  MonthlyStack temp;
  RasterGrid truth; // LABEL codes
};

/// Noise-free 12-month NDVI signature of a region.
std::array<double, 12> region_signature(const SynthRegion& region);
/// Monthly precipitation and temperature the generator assigns a region.
std::array<double, 12> region_precip(const SynthScene& scene, const SynthRegion& region);
std::array<double, 12> region_temp(const SynthScene& scene, const SynthRegion& region);

/// Builds the scene's rasters. Each cropland region gets an NDVI bump at its
/// peak month; irrigated regions are dry over the peak and the month before,
/// rainfed regions wet. Gaussian noise of `noise_sigma` is added to NDVI and
/// clamped to [-1,1]. Throws InvalidArgument for overlapping regions or a
/// region whose climate contradicts its irrigated flag under `heuristic`.
SynthWorld synth_generate(const SynthScene& scene, const HeuristicConfig& heuristic = {});

/// `count` evaluation points at centers of distinct cropland truth pixels,
/// drawn without replacement with `seed`.
std::vector<EvalPoint> sample_eval_points(const RasterGrid& truth, std::size_t count, std::uint64_t seed);

} // namespace irrigrid
