#pragma once

#include "irrigrid/clustering.hpp"
#include "irrigrid/ingest.hpp"
#include "irrigrid/raster.hpp"
#include "irrigrid/season.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace irrigrid {

/// Codes of the LABEL band written by the pipeline.
enum class LabelCode : std::uint8_t {
  Rainfed = 0,
  Irrigated = 1,
  NotCultivated = 2,
  NonCropland = 3,
  Nodata = 255,
};

float label_value(LabelCode code);
LabelCode label_code(Overall overall);

inline constexpr double kTileEdgeDegrees = 0.5;

struct TileSpec {
  GeoBox box;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
};

/// Row-major tiles of `edge` degrees anchored at the aoi's north-west corner.
/// Tiles on the east and south borders are clipped to the aoi.
std::vector<TileSpec> tile_aoi(const GeoBox& aoi, double edge = kTileEdgeDegrees);

std::uint64_t tile_seed(std::uint64_t seed, std::uint32_t tile_row, std::uint32_t tile_col);

struct PipelineConfig {
  HeuristicConfig heuristic;
  SelectionOptions selection;
  double tile_edge = kTileEdgeDegrees;

  void validate() const;
};

/// Everything one tile needs, already on the tile's grid.
struct TileInputs {
  MonthlyStack ndvi;
  CroplandMask mask;
  MonthlyStack precip;
  MonthlyStack temp;
};

/// Inputs for an arbitrary region. NDVI and mask share the analysis grid;
/// climate sources may sit on any grid and are mosaicked in order (the first
/// source containing a pixel center wins).
struct RegionInputs {
  MonthlyStack ndvi;
  CroplandMask mask;
  std::vector<MonthlyStack> precip;
  std::vector<MonthlyStack> temp;
};

struct ClusterReport {
  std::size_t pixels = 0;
  std::size_t climate_pixels = 0; // members with a complete climate series
  std::array<double, 12> centroid{};
  std::array<double, 12> precip_mm{};
  std::array<double, 12> temp_c{};
  std::optional<ClusterLabel> label;
};

enum class TileMode { Clustered, SingleCluster, PerPixel, Empty, Failed };
std::string_view to_string(TileMode mode);

struct TileReport {
  TileSpec tile;
  std::uint64_t seed = 0;
  TileMode mode = TileMode::Empty;
  std::string error; // set when mode == Failed
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::size_t cropland_pixels = 0;
  std::optional<std::size_t> k;
  std::vector<KCandidate> candidates;
  std::size_t silhouette_sample_size = 0;
  std::vector<ClusterReport> clusters;
  /// Pixel counts for RAINFED, IRRIGATED, NOT_CULTIVATED, NON_CROPLAND, nodata.
  std::array<std::size_t, 5> label_counts{};
  std::vector<std::string> warnings;
};

struct PredictionRaster {
  RasterGrid grid; // BandKind::Label
  std::vector<TileReport> provenance;

  std::size_t failed_tiles() const;
};

/// Mask, cluster, label one tile. Cropland pixels with an incomplete NDVI
/// series and clusters without climate data are painted nodata.
PredictionRaster predict_tile(const TileSpec& tile, const TileInputs& inputs, const PipelineConfig& config,
                              std::uint64_t seed);

/// Cuts `tile`'s window out of the region inputs. Throws CoverageError when
/// NDVI or climate data do not cover every tile pixel.
TileInputs extract_tile_inputs(const RegionInputs& inputs, const PixelWindow& window);

/// Tiles `aoi`, predicts every tile on a pool of `workers` threads with seed
/// tile_seed(seed, row, col), and merges the tiles into one raster on the
/// NDVI lattice. A tile that fails is painted nodata and recorded in the
/// provenance; the output does not depend on `workers`.
PredictionRaster predict_region(const GeoBox& aoi, const RegionInputs& inputs, const PipelineConfig& config,
                                std::uint64_t seed, std::size_t workers);

} // namespace irrigrid
