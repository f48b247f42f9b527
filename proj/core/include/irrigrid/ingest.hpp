#pragma once

#include "irrigrid/raster.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <vector>

namespace irrigrid {

/// One cloud-screened surface reflectance sample of a pixel.
struct Observation {
  std::chrono::year_month_day date;
  double nir = 0.0;
  double red = 0.0;
  bool valid = false;
};

/// (nir - red) / (nir + red). NaN when both bands are zero.
/// Throws InvalidArgument for negative reflectance.
float compute_ndvi(double nir, double red);

using MonthlySeries = std::array<float, MonthlyStack::kMonths>;

/// Mean NDVI of valid observations per calendar month. Empty months are
/// linearly interpolated between the nearest populated months, wrapping
/// December to January. A pixel with no valid observation is all-NaN.
MonthlySeries composite_monthly(std::span<const Observation> observations);

/// Observation CSV with header `pixel_row,pixel_col,date,nir,red,valid`,
/// composited onto `grid`. Pixels without rows stay nodata. Rows that fall
/// outside the grid are an InvalidArgument.
MonthlyStack composite_csv(std::istream& csv, const GridMeta& grid);
MonthlyStack composite_csv(const std::filesystem::path& path, const GridMeta& grid);

// --- cropland mask -----------------------------------------------------------

enum class MaskClass : std::uint8_t {
  Water = 0,
  NonCropland = 1,
  Cropland = 2,
};

/// Source-product code for each mask class. The defaults match the canonical
/// encoding; other products can be remapped on load.
struct MaskCodes {
  float water = 0.0f;
  float non_cropland = 1.0f;
  float cropland = 2.0f;
};

struct CroplandMask {
  RasterGrid grid; // BandKind::Mask, canonical codes {0,1,2,255}

  bool is_cropland(std::size_t pixel) const {
    return grid.values()[pixel] == static_cast<float>(MaskClass::Cropland);
  }
};

/// Reads an IRG1 MASK raster and rewrites its codes to the canonical set;
/// unrecognised codes become nodata.
CroplandMask load_mask(const std::filesystem::path& path, const MaskCodes& codes = {});
CroplandMask make_mask(RasterGrid grid, const MaskCodes& codes = {});

/// Cropland pixels with a complete 12-month series, as an n x 12 row-major
/// matrix plus the row-major pixel index of each row.
struct MaskedPixels {
  std::vector<std::size_t> pixel;
  std::vector<double> values;

  std::size_t size() const { return pixel.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * MonthlyStack::kMonths, MonthlyStack::kMonths);
  }
};

/// Throws AlignmentError naming both grids when they differ.
MaskedPixels apply_mask(const MonthlyStack& ndvi, const CroplandMask& mask);

struct ClimateStacks {
  MonthlyStack precip; // mm / month
  MonthlyStack temp;   // degrees C
};

/// Reads IRGS precipitation and temperature stacks and resamples both onto
/// `target`.
ClimateStacks load_climate(const std::filesystem::path& precip_path, const std::filesystem::path& temp_path,
                           const GridMeta& target);

} // namespace irrigrid
