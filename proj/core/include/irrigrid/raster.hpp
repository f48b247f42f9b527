#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace irrigrid {

/// Geographic bounding box in WGS84 decimal degrees.
struct GeoBox {
  double lon_min = 0.0;
  double lat_min = 0.0;
  double lon_max = 0.0;
  double lat_max = 0.0;

  double width() const { return lon_max - lon_min; }
  double height() const { return lat_max - lat_min; }

  /// Throws InvalidArgument unless min < max on both axes and every corner
  /// lies within [-180,180] x [-90,90].
  void validate() const;

  bool operator==(const GeoBox&) const = default;
};

/// Placement of a north-up, square-pixel grid. Pixel (0,0) is the top-left
/// cell; rows grow southward and columns eastward.
struct GridMeta {
  double origin_lon = 0.0;
  double origin_lat = 0.0;
  double pixel_size = 0.0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  GeoBox geobox() const;
  double center_lon(std::size_t col) const { return origin_lon + (static_cast<double>(col) + 0.5) * pixel_size; }
  double center_lat(std::size_t row) const { return origin_lat - (static_cast<double>(row) + 0.5) * pixel_size; }
  void validate() const;
  std::string describe() const;

  bool operator==(const GridMeta&) const = default;
};

/// Number of whole pixels needed to span `extent` at `step`. Values within
/// 1e-9 (relative) of an integer are taken as that integer so that float
/// noise in e.g. 0.5 / 0.00025 does not add a spurious column.
std::uint32_t pixels_to_cover(double extent, double step);

GridMeta geobox_to_grid(const GeoBox& box, double pixel_size);

/// Default analysis resolution, roughly 30 m at the equator.
inline constexpr double kDefaultPixelSize = 0.00025;

/// Rectangle of pixels on the lattice of some parent grid. Offsets are
/// signed so a window may extend past the parent's edges.
struct PixelWindow {
  std::int64_t row0 = 0;
  std::int64_t col0 = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  bool empty() const { return height == 0 || width == 0; }
  bool operator==(const PixelWindow&) const = default;
};

enum class BandKind : std::uint8_t {
  Ndvi = 0,
  PrecipMm = 1,
  TempC = 2,
  Mask = 3,
  Label = 4,
};

std::string_view to_string(BandKind kind);
bool is_categorical(BandKind kind);

inline constexpr float kCategoricalNodata = 255.0f;

/// NaN for continuous bands, 255 for MASK and LABEL.
float nodata_value(BandKind kind);
bool is_nodata(BandKind kind, float value);

/// One band of georeferenced 32-bit float samples.
class RasterGrid {
public:
  RasterGrid() = default;
  /// Grid filled with the band's nodata value.
  RasterGrid(GridMeta meta, BandKind kind);
  RasterGrid(GridMeta meta, BandKind kind, std::vector<float> values);

  const GridMeta& meta() const { return meta_; }
  BandKind kind() const { return kind_; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  float at(std::size_t row, std::size_t col) const { return values_[row * meta_.width + col]; }
  float& at(std::size_t row, std::size_t col) { return values_[row * meta_.width + col]; }

  bool nodata_at(std::size_t index) const { return is_nodata(kind_, values_[index]); }

  /// Checks the per-band value domain (NDVI in [-1,1], precipitation >= 0,
  /// categorical codes in {0,1,2,3,255}). Throws InvalidArgument naming the
  /// first offending pixel.
  void validate_values() const;

  /// Copy of a window that lies inside this grid.
  RasterGrid window(const PixelWindow& window) const;

  bool operator==(const RasterGrid& other) const;

private:
  GridMeta meta_;
  BandKind kind_ = BandKind::Ndvi;
  std::vector<float> values_;
};

/// Twelve co-registered grids, January through December.
class MonthlyStack {
public:
  static constexpr std::size_t kMonths = 12;

  MonthlyStack() = default;
  explicit MonthlyStack(std::array<RasterGrid, kMonths> months);

  const GridMeta& meta() const { return months_[0].meta(); }
  BandKind kind() const { return months_[0].kind(); }
  const RasterGrid& month(std::size_t index) const { return months_.at(index); }
  const std::array<RasterGrid, kMonths>& months() const { return months_; }

  /// The 12-month series of one pixel (row-major index).
  std::array<float, kMonths> series(std::size_t pixel) const;

  MonthlyStack window(const PixelWindow& window) const;

  bool operator==(const MonthlyStack&) const = default;

private:
  std::array<RasterGrid, kMonths> months_;
};

/// Bit-exact comparison: NaN payloads compare by bit pattern.
bool bit_identical(const RasterGrid& a, const RasterGrid& b);

// --- IRG1 / IRGS binary format -------------------------------------------

inline constexpr std::size_t kIrg1HeaderBytes = 40;

std::vector<std::uint8_t> encode_raster(const RasterGrid& grid);
RasterGrid decode_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_stack(const MonthlyStack& stack);
MonthlyStack decode_stack(std::span<const std::uint8_t> bytes);

struct RasterHeader {
  std::uint64_t offset = 0;
  BandKind kind = BandKind::Ndvi;
  GridMeta meta;
};

/// Headers of every record in an IRG1 or IRGS byte stream, without decoding
/// payloads (but checking they are present).
std::vector<RasterHeader> decode_headers(std::span<const std::uint8_t> bytes);

RasterGrid read_raster(const std::filesystem::path& path);
MonthlyStack read_stack(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Writes go to a sibling temporary file that is renamed over `path`.
void write_raster(const RasterGrid& grid, const std::filesystem::path& path);
void write_stack(const MonthlyStack& stack, const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// --- resampling -----------------------------------------------------------

/// Nearest-neighbour resample onto `dst`. A destination pixel takes the
/// source pixel containing its center; centers outside the source get
/// nodata. Throws InvalidArgument if the grids do not overlap.
RasterGrid resample_nearest(const RasterGrid& src, const GridMeta& dst);
MonthlyStack resample_nearest(const MonthlyStack& src, const GridMeta& dst);

/// Window of `parent`'s lattice covered by `box`, with each edge snapped to
/// the nearest pixel boundary. May be empty or partly outside the parent.
PixelWindow snap_to_lattice(const GridMeta& parent, const GeoBox& box);
bool window_inside(const GridMeta& parent, const PixelWindow& window);
/// Grid placement of `window`; requires a non-empty window.
GridMeta window_meta(const GridMeta& parent, const PixelWindow& window);

/// Row/column of the pixel of `grid` containing (lon, lat), if any.
bool locate_pixel(const GridMeta& grid, double lon, double lat, std::size_t& row, std::size_t& col);

} // namespace irrigrid
