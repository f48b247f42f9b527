#include "irrigrid/pipeline.hpp"

#include "irrigrid/error.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace irrigrid {

namespace {

constexpr std::size_t kMonths = MonthlyStack::kMonths;

std::size_t count_index(LabelCode code) {
  switch (code) {
  case LabelCode::Rainfed: return 0;
  case LabelCode::Irrigated: return 1;
  case LabelCode::NotCultivated: return 2;
  case LabelCode::NonCropland: return 3;
  case LabelCode::Nodata: return 4;
  }
  return 4;
}

void count_labels(TileReport& report, const RasterGrid& grid) {
  report.label_counts.fill(0);
  for (float v : grid.values()) {
    auto code = is_nodata(BandKind::Label, v) ? LabelCode::Nodata : static_cast<LabelCode>(static_cast<int>(v));
    ++report.label_counts[count_index(code)];
  }
}

bool complete(std::span<const float> series) {
  for (float v : series) {
    if (std::isnan(v)) return false;
  }
  return true;
}

// Mosaic of climate sources onto `target`; the first source whose footprint
// contains a pixel center supplies that pixel.
MonthlyStack mosaic(const std::vector<MonthlyStack>& sources, const GridMeta& target, BandKind kind,
                    const char* what) {
  if (sources.empty()) throw CoverageError(std::string("no ") + what + " sources");
  std::array<std::vector<float>, kMonths> values;
  for (auto& v : values) v.assign(target.pixel_count(), nodata_value(kind));
  std::size_t uncovered = 0;
  for (std::uint32_t r = 0; r < target.height; ++r) {
    const double lat = target.center_lat(r);
    for (std::uint32_t c = 0; c < target.width; ++c) {
      const double lon = target.center_lon(c);
      const std::size_t p = std::size_t{r} * target.width + c;
      bool found = false;
      for (const auto& src : sources) {
        std::size_t sr = 0;
        std::size_t sc = 0;
        if (!locate_pixel(src.meta(), lon, lat, sr, sc)) continue;
        for (std::size_t m = 0; m < kMonths; ++m) values[m][p] = src.month(m).at(sr, sc);
        found = true;
        break;
      }
      if (!found) ++uncovered;
    }
  }
  if (uncovered > 0) {
    throw CoverageError(std::string(what) + " data missing for " + std::to_string(uncovered) + " of " +
                        std::to_string(target.pixel_count()) + " tile pixels");
  }
  std::array<RasterGrid, kMonths> grids;
  for (std::size_t m = 0; m < kMonths; ++m) grids[m] = RasterGrid(target, kind, std::move(values[m]));
  return MonthlyStack(std::move(grids));
}

void paint_cluster_labels(TileReport& report, RasterGrid& out, const MaskedPixels& pixels,
                          const TileInputs& inputs, const ClusterModel& model, const HeuristicConfig& heuristic) {
  const std::size_t k = model.k;
  report.k = k;
  report.clusters.assign(k, ClusterReport{});

  std::vector<std::array<double, kMonths>> precip_sum(k), temp_sum(k);
  for (auto& a : precip_sum) a.fill(0.0);
  for (auto& a : temp_sum) a.fill(0.0);

  for (std::size_t i = 0; i < pixels.size(); ++i) {
    auto c = model.assignments[i];
    auto& cr = report.clusters[c];
    ++cr.pixels;
    auto precip = inputs.precip.series(pixels.pixel[i]);
    auto temp = inputs.temp.series(pixels.pixel[i]);
    if (!complete(precip) || !complete(temp)) continue;
    ++cr.climate_pixels;
    for (std::size_t m = 0; m < kMonths; ++m) {
      precip_sum[c][m] += precip[m];
      temp_sum[c][m] += temp[m];
    }
  }

  std::vector<float> code(k, label_value(LabelCode::Nodata));
  for (std::size_t c = 0; c < k; ++c) {
    auto& cr = report.clusters[c];
    auto centroid = model.centroid(c);
    std::copy(centroid.begin(), centroid.end(), cr.centroid.begin());
    if (cr.climate_pixels == 0) {
      report.warnings.push_back("cluster " + std::to_string(c) + " has no climate data; painted nodata");
      continue;
    }
    for (std::size_t m = 0; m < kMonths; ++m) {
      cr.precip_mm[m] = precip_sum[c][m] / static_cast<double>(cr.climate_pixels);
      cr.temp_c[m] = temp_sum[c][m] / static_cast<double>(cr.climate_pixels);
    }
    cr.label = label_cluster(cr.centroid, cr.precip_mm, cr.temp_c, heuristic, c);
    code[c] = label_value(label_code(cr.label->overall));
  }

  auto values = out.values();
  for (std::size_t i = 0; i < pixels.size(); ++i) values[pixels.pixel[i]] = code[model.assignments[i]];
}

void paint_per_pixel(TileReport& report, RasterGrid& out, const MaskedPixels& pixels, const TileInputs& inputs,
                     const HeuristicConfig& heuristic) {
  auto values = out.values();
  std::size_t missing_climate = 0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    auto precip_f = inputs.precip.series(pixels.pixel[i]);
    auto temp_f = inputs.temp.series(pixels.pixel[i]);
    if (!complete(precip_f) || !complete(temp_f)) {
      ++missing_climate;
      continue;
    }
    std::array<double, kMonths> ndvi{}, precip{}, temp{};
    auto row = pixels.row(i);
    for (std::size_t m = 0; m < kMonths; ++m) {
      ndvi[m] = row[m];
      precip[m] = precip_f[m];
      temp[m] = temp_f[m];
    }
    auto label = label_cluster(ndvi, precip, temp, heuristic, i);
    values[pixels.pixel[i]] = label_value(label_code(label.overall));
  }
  if (missing_climate > 0) {
    report.warnings.push_back(std::to_string(missing_climate) + " cropland pixels lack climate data; painted nodata");
  }
}

} // namespace

float label_value(LabelCode code) { return static_cast<float>(static_cast<std::uint8_t>(code)); }

LabelCode label_code(Overall overall) {
  switch (overall) {
  case Overall::Rainfed: return LabelCode::Rainfed;
  case Overall::Irrigated: return LabelCode::Irrigated;
  case Overall::NotCultivated: return LabelCode::NotCultivated;
  }
  return LabelCode::Nodata;
}

std::string_view to_string(TileMode mode) {
  switch (mode) {
  case TileMode::Clustered: return "clustered";
  case TileMode::SingleCluster: return "single_cluster";
  case TileMode::PerPixel: return "per_pixel";
  case TileMode::Empty: return "empty";
  case TileMode::Failed: return "failed";
  }
  return "unknown";
}

std::vector<TileSpec> tile_aoi(const GeoBox& aoi, double edge) {
  aoi.validate();
  if (!(edge > 0.0)) throw InvalidArgument("tile edge must be > 0");
  const std::uint32_t cols = pixels_to_cover(aoi.width(), edge);
  const std::uint32_t rows = pixels_to_cover(aoi.height(), edge);
  std::vector<TileSpec> tiles;
  tiles.reserve(std::size_t{rows} * cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    const double top = aoi.lat_max - r * edge;
    const double bottom = r + 1 == rows ? aoi.lat_min : std::max(aoi.lat_min, aoi.lat_max - (r + 1) * edge);
    for (std::uint32_t c = 0; c < cols; ++c) {
      const double left = aoi.lon_min + c * edge;
      const double right = c + 1 == cols ? aoi.lon_max : std::min(aoi.lon_max, aoi.lon_min + (c + 1) * edge);
      tiles.push_back(TileSpec{GeoBox{left, bottom, right, top}, r, c});
    }
  }
  return tiles;
}

std::uint64_t tile_seed(std::uint64_t seed, std::uint32_t tile_row, std::uint32_t tile_col) {
  return mix_seed(mix_seed(seed, tile_row), tile_col);
}

void PipelineConfig::validate() const {
  heuristic.validate();
  if (selection.k_lo < 2 || selection.k_lo > selection.k_hi) {
    throw InvalidArgument("k range must satisfy 2 <= k_lo <= k_hi");
  }
  if (selection.restarts == 0) throw InvalidArgument("restarts must be >= 1");
  if (!(tile_edge > 0.0)) throw InvalidArgument("tile edge must be > 0");
}

std::size_t PredictionRaster::failed_tiles() const {
  std::size_t n = 0;
  for (const auto& t : provenance) n += t.mode == TileMode::Failed ? 1 : 0;
  return n;
}

PredictionRaster predict_tile(const TileSpec& tile, const TileInputs& inputs, const PipelineConfig& config,
                              std::uint64_t seed) {
  const GridMeta& grid = inputs.ndvi.meta();
  for (const auto* other : {&inputs.mask.grid.meta(), &inputs.precip.meta(), &inputs.temp.meta()}) {
    if (!(*other == grid)) {
      throw AlignmentError("tile inputs misaligned: " + other->describe() + " vs NDVI " + grid.describe());
    }
  }

  TileReport report;
  report.tile = tile;
  report.seed = seed;
  report.width = grid.width;
  report.height = grid.height;

  RasterGrid out(grid, BandKind::Label);
  {
    auto values = out.values();
    for (std::size_t p = 0; p < values.size(); ++p) {
      if (inputs.mask.grid.nodata_at(p) || inputs.mask.is_cropland(p)) continue;
      values[p] = label_value(LabelCode::NonCropland);
    }
  }

  MaskedPixels pixels = apply_mask(inputs.ndvi, inputs.mask);
  report.cropland_pixels = pixels.size();

  if (pixels.size() == 0) {
    report.mode = TileMode::Empty;
    report.warnings.push_back("no cropland pixels with a complete NDVI series");
  } else if (pixels.size() < 2 * config.selection.k_hi) {
    report.mode = TileMode::PerPixel;
    report.warnings.push_back("only " + std::to_string(pixels.size()) +
                              " cropland pixels; labelled per pixel without clustering");
    paint_per_pixel(report, out, pixels, inputs, config.heuristic);
  } else {
    PointsView points{pixels.values, kMonths};
    ClusterModel model;
    try {
      ModelSelection sel = select_model(points, seed, config.selection);
      report.mode = TileMode::Clustered;
      report.candidates = std::move(sel.candidates);
      report.silhouette_sample_size = sel.silhouette_sample_size;
      model = std::move(sel.model);
    } catch (const UndefinedMetric& e) {
      report.mode = TileMode::SingleCluster;
      report.warnings.push_back(std::string(e.what()) + "; fitted a single cluster");
      model = kmeans_fit(points, 1, seed, config.selection.kmeans);
    }
    paint_cluster_labels(report, out, pixels, inputs, model, config.heuristic);
  }

  count_labels(report, out);
  PredictionRaster result{std::move(out), {}};
  result.provenance.push_back(std::move(report));
  return result;
}

TileInputs extract_tile_inputs(const RegionInputs& inputs, const PixelWindow& window) {
  const GridMeta& analysis = inputs.ndvi.meta();
  if (window.empty()) throw CoverageError("tile window is empty");
  if (!window_inside(analysis, window)) throw CoverageError("NDVI stack does not cover the tile");
  if (!window_inside(inputs.mask.grid.meta(), window)) throw CoverageError("cropland mask does not cover the tile");
  TileInputs t;
  t.ndvi = inputs.ndvi.window(window);
  t.mask = CroplandMask{inputs.mask.grid.window(window)};
  const GridMeta& target = t.ndvi.meta();
  t.precip = mosaic(inputs.precip, target, BandKind::PrecipMm, "precipitation");
  t.temp = mosaic(inputs.temp, target, BandKind::TempC, "temperature");
  return t;
}

PredictionRaster predict_region(const GeoBox& aoi, const RegionInputs& inputs, const PipelineConfig& config,
                                std::uint64_t seed, std::size_t workers) {
  aoi.validate();
  config.validate();
  if (workers == 0) throw InvalidArgument("workers must be >= 1");
  const GridMeta& analysis = inputs.ndvi.meta();
  if (!(inputs.mask.grid.meta() == analysis)) {
    throw AlignmentError("mask grid " + inputs.mask.grid.meta().describe() + " does not match NDVI grid " +
                         analysis.describe());
  }

  const PixelWindow region = snap_to_lattice(analysis, aoi);
  if (region.empty()) throw InvalidArgument("aoi is smaller than one pixel");
  const GridMeta out_meta = window_meta(analysis, region);

  const std::vector<TileSpec> tiles = tile_aoi(aoi, config.tile_edge);
  std::vector<PixelWindow> windows;
  windows.reserve(tiles.size());
  for (const auto& t : tiles) windows.push_back(snap_to_lattice(analysis, t.box));

  std::vector<PredictionRaster> results(tiles.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < tiles.size(); i = next.fetch_add(1)) {
      const auto& tile = tiles[i];
      const std::uint64_t s = tile_seed(seed, tile.row, tile.col);
      try {
        if (windows[i].empty()) {
          TileReport rep;
          rep.tile = tile;
          rep.seed = s;
          rep.mode = TileMode::Empty;
          rep.warnings.push_back("tile narrower than one pixel after snapping");
          results[i].provenance.push_back(std::move(rep));
          continue;
        }
        results[i] = predict_tile(tile, extract_tile_inputs(inputs, windows[i]), config, s);
      } catch (const std::exception& e) {
        TileReport rep;
        rep.tile = tile;
        rep.seed = s;
        rep.mode = TileMode::Failed;
        rep.error = e.what();
        rep.width = windows[i].width;
        rep.height = windows[i].height;
        rep.label_counts[4] = std::size_t{windows[i].width} * windows[i].height;
        results[i] = PredictionRaster{RasterGrid{}, {std::move(rep)}};
      }
    }
  };

  const std::size_t pool = std::min(workers, std::max<std::size_t>(tiles.size(), 1));
  if (pool <= 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(work);
  }

  PredictionRaster merged{RasterGrid(out_meta, BandKind::Label), {}};
  auto dst = merged.grid.values();
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    auto& res = results[i];
    if (res.grid.values().size() != 0) {
      const auto& w = windows[i];
      const auto src = res.grid.values();
      const auto row_off = static_cast<std::size_t>(w.row0 - region.row0);
      const auto col_off = static_cast<std::size_t>(w.col0 - region.col0);
      for (std::uint32_t r = 0; r < w.height; ++r) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(std::size_t{r} * w.width), w.width,
                    dst.begin() + static_cast<std::ptrdiff_t>((row_off + r) * out_meta.width + col_off));
      }
    }
    for (auto& rep : res.provenance) merged.provenance.push_back(std::move(rep));
  }
  return merged;
}

} // namespace irrigrid
