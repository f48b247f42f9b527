#include "irrigrid/evaluation.hpp"

#include "irrigrid/error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace irrigrid {

namespace {

constexpr std::size_t kMonths = MonthlyStack::kMonths;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line_no, const char* name) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw InvalidArgument("points csv line " + std::to_string(line_no) + ": bad " + name + " '" +
                          std::string(field) + "'");
  }
  return v;
}

// Offset of `b`'s lattice relative to `a`'s, in whole pixels.
void lattice_offset(const GridMeta& a, const GridMeta& b, std::int64_t& drow, std::int64_t& dcol) {
  if (a.pixel_size != b.pixel_size) throw AlignmentError("prediction rasters have different pixel sizes");
  const double fc = (b.origin_lon - a.origin_lon) / a.pixel_size;
  const double fr = (a.origin_lat - b.origin_lat) / a.pixel_size;
  dcol = std::llround(fc);
  drow = std::llround(fr);
  if (std::abs(fc - static_cast<double>(dcol)) > 1e-6 || std::abs(fr - static_cast<double>(drow)) > 1e-6) {
    throw AlignmentError("prediction rasters " + a.describe() + " and " + b.describe() + " do not share a lattice");
  }
}

GeoBox shifted(const GeoBox& box, double dlon, double dlat) {
  return GeoBox{box.lon_min + dlon, box.lat_min + dlat, box.lon_max + dlon, box.lat_max + dlat};
}

bool covers_all(const std::vector<MonthlyStack>& sources, const GridMeta& target) {
  if (sources.empty()) return false;
  for (std::uint32_t r = 0; r < target.height; ++r) {
    for (std::uint32_t c = 0; c < target.width; ++c) {
      bool found = false;
      for (const auto& s : sources) {
        std::size_t sr = 0;
        std::size_t sc = 0;
        if (locate_pixel(s.meta(), target.center_lon(c), target.center_lat(r), sr, sc)) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

bool inside_box(const GeoBox& box, double lon, double lat) {
  return lon >= box.lon_min && lon < box.lon_max && lat > box.lat_min && lat <= box.lat_max;
}

bool boxes_overlap(const GeoBox& a, const GeoBox& b) {
  return a.lon_min < b.lon_max && b.lon_min < a.lon_max && a.lat_min < b.lat_max && b.lat_min < a.lat_max;
}

} // namespace

// --- consistency --------------------------------------------------------------

std::optional<Verdict> binary_label(float code) {
  if (code == label_value(LabelCode::Irrigated)) return Verdict::Irrigated;
  if (code == label_value(LabelCode::Rainfed) || code == label_value(LabelCode::NotCultivated)) {
    return Verdict::Rainfed;
  }
  return std::nullopt;
}

Agreement compare_predictions(const RasterGrid& a, const RasterGrid& b) {
  if (a.kind() != BandKind::Label || b.kind() != BandKind::Label) {
    throw InvalidArgument("compare_predictions expects LABEL rasters");
  }
  std::int64_t drow = 0;
  std::int64_t dcol = 0;
  lattice_offset(a.meta(), b.meta(), drow, dcol);
  // Pixel (r, c) of `b` is pixel (r + drow, c + dcol) of `a`.
  const std::int64_t r_lo = std::max<std::int64_t>(0, drow);
  const std::int64_t r_hi = std::min<std::int64_t>(a.meta().height, drow + b.meta().height);
  const std::int64_t c_lo = std::max<std::int64_t>(0, dcol);
  const std::int64_t c_hi = std::min<std::int64_t>(a.meta().width, dcol + b.meta().width);

  Agreement out;
  for (std::int64_t r = r_lo; r < r_hi; ++r) {
    for (std::int64_t c = c_lo; c < c_hi; ++c) {
      auto la = binary_label(a.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
      auto lb = binary_label(b.at(static_cast<std::size_t>(r - drow), static_cast<std::size_t>(c - dcol)));
      if (!la || !lb) continue;
      ++out.comparisons;
      if (*la == *lb) ++out.agreements;
    }
  }
  return out;
}

std::array<std::pair<int, int>, 8> consistency_shifts() {
  std::array<std::pair<int, int>, 8> out{};
  std::size_t i = 0;
  for (int dy : {1, 0, -1}) {
    for (int dx : {-1, 0, 1}) {
      if (dx == 0 && dy == 0) continue;
      out[i++] = {dx, dy};
    }
  }
  return out;
}

ConsistencyReport consistency_check(const GeoBox& aoi, const RegionInputs& inputs, const PipelineConfig& config,
                                    std::uint64_t seed, std::size_t workers) {
  aoi.validate();
  const GridMeta& analysis = inputs.ndvi.meta();
  const double ps = analysis.pixel_size;
  const std::int64_t step_x = std::llround(aoi.width() / 3.0 / ps);
  const std::int64_t step_y = std::llround(aoi.height() / 3.0 / ps);

  // The aoi plus a one-third margin on every side must be covered.
  const GeoBox expanded{aoi.lon_min - step_x * ps, aoi.lat_min - step_y * ps, aoi.lon_max + step_x * ps,
                        aoi.lat_max + step_y * ps};
  const PixelWindow ew = snap_to_lattice(analysis, expanded);
  if (ew.empty() || !window_inside(analysis, ew) || !window_inside(inputs.mask.grid.meta(), ew)) {
    throw InvalidArgument("NDVI/mask inputs do not cover the aoi plus a one-third margin");
  }
  const GridMeta em = window_meta(analysis, ew);
  if (!covers_all(inputs.precip, em) || !covers_all(inputs.temp, em)) {
    throw InvalidArgument("climate inputs do not cover the aoi plus a one-third margin");
  }

  ConsistencyReport report;
  const PredictionRaster base = predict_region(aoi, inputs, config, seed, workers);
  report.base_failed_tiles = base.failed_tiles();

  for (auto [dx, dy] : consistency_shifts()) {
    ShiftAgreement s;
    s.dx = dx;
    s.dy = dy;
    s.dx_pixels = dx * step_x;
    s.dy_pixels = dy * step_y;
    s.dx_degrees = static_cast<double>(s.dx_pixels) * ps;
    s.dy_degrees = static_cast<double>(s.dy_pixels) * ps;
    const PredictionRaster moved = predict_region(shifted(aoi, s.dx_degrees, s.dy_degrees), inputs, config, seed, workers);
    s.failed_tiles = moved.failed_tiles();
    s.agreement = compare_predictions(base.grid, moved.grid);
    report.overall.comparisons += s.agreement.comparisons;
    report.overall.agreements += s.agreement.agreements;
    report.shifts.push_back(s);
  }
  return report;
}

// --- point accuracy -----------------------------------------------------------

AccuracyReport evaluate_points(const RasterGrid& labels, std::span<const EvalPoint> points) {
  if (labels.kind() != BandKind::Label) {
    throw InvalidArgument("evaluate_points expects a LABEL raster, got " + std::string(to_string(labels.kind())));
  }
  AccuracyReport report;
  for (const auto& p : points) {
    PointOutcome o;
    o.point = p;
    std::size_t row = 0;
    std::size_t col = 0;
    if (!locate_pixel(labels.meta(), p.lon, p.lat, row, col)) {
      o.reason = "outside raster";
    } else {
      o.predicted = binary_label(labels.at(row, col));
      if (!o.predicted) {
        o.reason = is_nodata(BandKind::Label, labels.at(row, col)) ? "nodata pixel" : "non-cropland pixel";
      }
    }
    if (o.predicted) {
      ++report.scored;
      const auto t = p.truth == Verdict::Irrigated ? 1 : 0;
      const auto q = *o.predicted == Verdict::Irrigated ? 1 : 0;
      ++report.confusion[t][q];
      if (t == q) ++report.matches;
    } else {
      ++report.unscorable;
    }
    report.outcomes.push_back(std::move(o));
  }
  return report;
}

std::vector<EvalPoint> read_points_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InvalidArgument("points csv is empty");
  ++line_no;
  if (trim(line) != "lon,lat,label") throw InvalidArgument("points csv header must be lon,lat,label");
  std::vector<EvalPoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = trim(line);
    if (l.empty()) continue;
    auto c1 = l.find(',');
    auto c2 = c1 == std::string_view::npos ? c1 : l.find(',', c1 + 1);
    if (c2 == std::string_view::npos || l.find(',', c2 + 1) != std::string_view::npos) {
      throw InvalidArgument("points csv line " + std::to_string(line_no) + ": expected 3 fields");
    }
    EvalPoint p;
    p.lon = parse_double(trim(l.substr(0, c1)), line_no, "lon");
    p.lat = parse_double(trim(l.substr(c1 + 1, c2 - c1 - 1)), line_no, "lat");
    std::string label(trim(l.substr(c2 + 1)));
    std::transform(label.begin(), label.end(), label.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (label == "irrigated") {
      p.truth = Verdict::Irrigated;
    } else if (label == "rainfed") {
      p.truth = Verdict::Rainfed;
    } else {
      throw InvalidArgument("points csv line " + std::to_string(line_no) + ": label must be irrigated or rainfed");
    }
    out.push_back(p);
  }
  return out;
}

std::vector<EvalPoint> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_points_csv(in);
}

std::string write_points_csv(std::span<const EvalPoint> points) {
  std::ostringstream os;
  os.precision(17);
  os << "lon,lat,label\n";
  for (const auto& p : points) os << p.lon << ',' << p.lat << ',' << to_string(p.truth) << '\n';
  return os.str();
}

// --- synthetic scenes ---------------------------------------------------------

std::array<double, 12> region_signature(const SynthRegion& region) {
  std::array<double, 12> out{};
  for (int m = 0; m < 12; ++m) {
    if (region.land != MaskClass::Cropland) {
      out[m] = region.base_ndvi;
      continue;
    }
    double d = month_distance(m + 1, region.peak_month);
    double w = region.width_months;
    out[m] = region.base_ndvi + (region.peak_ndvi - region.base_ndvi) * std::exp(-0.5 * (d / w) * (d / w));
  }
  return out;
}

std::array<double, 12> region_precip(const SynthScene& scene, const SynthRegion& region) {
  if (region.precip_mm) return *region.precip_mm;
  std::array<double, 12> out{};
  out.fill(scene.baseline_precip_mm);
  if (region.land == MaskClass::Cropland) {
    const double season = region.irrigated ? scene.dry_precip_mm : scene.wet_precip_mm;
    int at = region.peak_month - 1;
    out[at] = season;
    out[(at + 11) % 12] = season;
  }
  return out;
}

std::array<double, 12> region_temp(const SynthScene& scene, const SynthRegion& region) {
  if (region.temp_c) return *region.temp_c;
  std::array<double, 12> out{};
  out.fill(scene.temp_c);
  return out;
}

SynthWorld synth_generate(const SynthScene& scene, const HeuristicConfig& heuristic) {
  heuristic.validate();
  const GridMeta grid = geobox_to_grid(scene.extent, scene.pixel_size);
  if (!(scene.noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");

  struct Prepared {
    std::array<double, 12> ndvi, precip, temp;
    float mask;
    float truth;
  };
  std::vector<Prepared> prepared;
  for (std::size_t i = 0; i < scene.regions.size(); ++i) {
    const auto& r = scene.regions[i];
    r.box.validate();
    if (r.peak_month < 1 || r.peak_month > 12) throw InvalidArgument("region peak_month outside 1..12");
    if (!(r.width_months > 0.0)) throw InvalidArgument("region width_months must be > 0");
    if (r.peak_ndvi < -1.0 || r.peak_ndvi > 1.0 || r.base_ndvi < -1.0 || r.base_ndvi > 1.0) {
      throw InvalidArgument("region NDVI values outside [-1,1]");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (boxes_overlap(r.box, scene.regions[j].box)) {
        throw InvalidArgument("synthetic regions " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
    Prepared p;
    p.ndvi = region_signature(r);
    p.precip = region_precip(scene, r);
    p.temp = region_temp(scene, r);
    for (double v : p.precip) {
      if (!(v >= 0.0)) throw InvalidArgument("region precipitation must be >= 0");
    }
    p.mask = static_cast<float>(r.land);
    if (r.land != MaskClass::Cropland) {
      p.truth = label_value(LabelCode::NonCropland);
    } else {
      // The construction must be something the labelling rule can recover.
      ClusterLabel expected = label_cluster(p.ndvi, p.precip, p.temp, heuristic);
      Overall built = r.peak_ndvi > heuristic.ndvi_peak_threshold
                          ? (r.irrigated ? Overall::Irrigated : Overall::Rainfed)
                          : Overall::NotCultivated;
      if (expected.overall != built) {
        throw InvalidArgument("region " + std::to_string(i) + " is built as " + std::string(to_string(built)) +
                              " but its signature and climate read as " + std::string(to_string(expected.overall)));
      }
      p.truth = label_value(label_code(built));
    }
    prepared.push_back(p);
  }

  if (scene.background == MaskClass::Cropland) {
    throw InvalidArgument("background must be water or non_cropland");
  }
  Prepared background;
  background.ndvi.fill(scene.background_ndvi);
  background.precip.fill(scene.baseline_precip_mm);
  background.temp.fill(scene.temp_c);
  background.mask = static_cast<float>(scene.background);
  background.truth = label_value(LabelCode::NonCropland);

  const std::size_t n = grid.pixel_count();
  std::array<std::vector<float>, kMonths> ndvi, precip, temp;
  for (std::size_t m = 0; m < kMonths; ++m) {
    ndvi[m].resize(n);
    precip[m].resize(n);
    temp[m].resize(n);
  }
  std::vector<float> mask(n), truth(n);
  detail::Rng rng(scene.seed);

  for (std::uint32_t row = 0; row < grid.height; ++row) {
    const double lat = grid.center_lat(row);
    for (std::uint32_t col = 0; col < grid.width; ++col) {
      const double lon = grid.center_lon(col);
      const std::size_t p = std::size_t{row} * grid.width + col;
      const Prepared* src = &background;
      for (std::size_t i = 0; i < scene.regions.size(); ++i) {
        if (inside_box(scene.regions[i].box, lon, lat)) {
          src = &prepared[i];
          break;
        }
      }
      mask[p] = src->mask;
      truth[p] = src->truth;
      for (std::size_t m = 0; m < kMonths; ++m) {
        double v = src->ndvi[m];
        if (scene.noise_sigma > 0.0) v += scene.noise_sigma * rng.normal();
        ndvi[m][p] = static_cast<float>(std::clamp(v, -1.0, 1.0));
        precip[m][p] = static_cast<float>(src->precip[m]);
        temp[m][p] = static_cast<float>(src->temp[m]);
      }
    }
  }

  auto stack = [&](std::array<std::vector<float>, kMonths>& v, BandKind kind) {
    std::array<RasterGrid, kMonths> grids;
    for (std::size_t m = 0; m < kMonths; ++m) grids[m] = RasterGrid(grid, kind, std::move(v[m]));
    return MonthlyStack(std::move(grids));
  };
  SynthWorld world;
  world.ndvi = stack(ndvi, BandKind::Ndvi);
  world.precip = stack(precip, BandKind::PrecipMm);
  world.temp = stack(temp, BandKind::TempC);
  world.mask = CroplandMask{RasterGrid(grid, BandKind::Mask, std::move(mask))};
  world.truth = RasterGrid(grid, BandKind::Label, std::move(truth));
  return world;
}

std::vector<EvalPoint> sample_eval_points(const RasterGrid& truth, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < truth.values().size(); ++p) {
    if (binary_label(truth.values()[p])) candidates.push_back(p);
  }
  count = std::min(count, candidates.size());
  detail::Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) std::swap(candidates[i], candidates[i + rng.index(candidates.size() - i)]);
  std::vector<EvalPoint> out;
  out.reserve(count);
  const auto& m = truth.meta();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t p = candidates[i];
    EvalPoint e;
    e.lon = m.center_lon(p % m.width);
    e.lat = m.center_lat(p / m.width);
    e.truth = *binary_label(truth.values()[p]);
    out.push_back(e);
  }
  return out;
}

} // namespace irrigrid
