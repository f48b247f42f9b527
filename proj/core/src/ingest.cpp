#include "irrigrid/ingest.hpp"

#include "irrigrid/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>

namespace irrigrid {

namespace {

constexpr std::size_t kMonths = MonthlyStack::kMonths;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw InvalidArgument("observation csv line " + std::to_string(line_no) + ": bad " + name + " '" +
                          std::string(field) + "'");
  }
  return value;
}

std::chrono::year_month_day parse_date(std::string_view field, std::size_t line_no) {
  // YYYY-MM-DD, optionally followed by a time component which is ignored.
  auto bad = [&] {
    return InvalidArgument("observation csv line " + std::to_string(line_no) + ": bad ISO-8601 date '" +
                           std::string(field) + "'");
  };
  if (field.size() < 10 || field[4] != '-' || field[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  try {
    y = parse_number<int>(field.substr(0, 4), line_no, "year");
    m = parse_number<unsigned>(field.substr(5, 2), line_no, "month");
    d = parse_number<unsigned>(field.substr(8, 2), line_no, "day");
  } catch (const InvalidArgument&) {
    throw bad();
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return ymd;
}

bool parse_bool(std::string_view field, std::size_t line_no) {
  if (field == "1" || field == "true" || field == "TRUE" || field == "True") return true;
  if (field == "0" || field == "false" || field == "FALSE" || field == "False") return false;
  throw InvalidArgument("observation csv line " + std::to_string(line_no) + ": bad valid flag '" +
                        std::string(field) + "'");
}

} // namespace

float compute_ndvi(double nir, double red) {
  if (!(nir >= 0.0) || !(red >= 0.0)) {
    throw InvalidArgument("reflectance must be non-negative (nir=" + std::to_string(nir) +
                          ", red=" + std::to_string(red) + ")");
  }
  double sum = nir + red;
  if (sum == 0.0) return std::numeric_limits<float>::quiet_NaN();
  return static_cast<float>((nir - red) / sum);
}

MonthlySeries composite_monthly(std::span<const Observation> observations) {
  std::array<double, kMonths> sum{};
  std::array<std::size_t, kMonths> count{};
  for (const auto& obs : observations) {
    if (!obs.valid) continue;
    float v = compute_ndvi(obs.nir, obs.red);
    if (std::isnan(v)) continue;
    auto m = static_cast<unsigned>(obs.date.month()) - 1;
    sum[m] += v;
    count[m] += 1;
  }

  MonthlySeries out;
  out.fill(std::numeric_limits<float>::quiet_NaN());
  std::array<double, kMonths> mean{};
  bool any = false;
  for (std::size_t m = 0; m < kMonths; ++m) {
    if (count[m] > 0) {
      mean[m] = sum[m] / static_cast<double>(count[m]);
      any = true;
    }
  }
  if (!any) return out;

  for (std::size_t m = 0; m < kMonths; ++m) {
    if (count[m] > 0) {
      out[m] = static_cast<float>(mean[m]);
      continue;
    }
    std::size_t back = 1;
    while (count[(m + kMonths - back) % kMonths] == 0) ++back;
    std::size_t fwd = 1;
    while (count[(m + fwd) % kMonths] == 0) ++fwd;
    double prev = mean[(m + kMonths - back) % kMonths];
    double next = mean[(m + fwd) % kMonths];
    double t = static_cast<double>(back) / static_cast<double>(back + fwd);
    out[m] = static_cast<float>(prev + (next - prev) * t);
  }
  return out;
}

MonthlyStack composite_csv(std::istream& csv, const GridMeta& grid) {
  grid.validate();
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(csv, line)) throw InvalidArgument("observation csv is empty");
  ++line_no;
  {
    auto header = split(line, ',');
    const std::array<std::string_view, 6> expected{"pixel_row", "pixel_col", "date", "nir", "red", "valid"};
    if (header.size() != expected.size() || !std::equal(header.begin(), header.end(), expected.begin())) {
      throw InvalidArgument("observation csv header must be pixel_row,pixel_col,date,nir,red,valid");
    }
  }

  std::vector<std::vector<Observation>> per_pixel(grid.pixel_count());
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 6) {
      throw InvalidArgument("observation csv line " + std::to_string(line_no) + ": expected 6 fields");
    }
    auto row = parse_number<std::uint64_t>(f[0], line_no, "pixel_row");
    auto col = parse_number<std::uint64_t>(f[1], line_no, "pixel_col");
    if (row >= grid.height || col >= grid.width) {
      throw InvalidArgument("observation csv line " + std::to_string(line_no) + ": pixel (" +
                            std::to_string(row) + "," + std::to_string(col) + ") outside grid " +
                            grid.describe());
    }
    Observation obs;
    obs.date = parse_date(f[2], line_no);
    obs.nir = parse_number<double>(f[3], line_no, "nir");
    obs.red = parse_number<double>(f[4], line_no, "red");
    obs.valid = parse_bool(f[5], line_no);
    if (obs.valid && (obs.nir < 0.0 || obs.nir > 1.0 || obs.red < 0.0 || obs.red > 1.0)) {
      throw InvalidArgument("observation csv line " + std::to_string(line_no) +
                            ": valid reflectance outside [0,1]");
    }
    per_pixel[row * grid.width + col].push_back(obs);
  }

  std::array<std::vector<float>, kMonths> months;
  for (auto& m : months) m.assign(grid.pixel_count(), std::numeric_limits<float>::quiet_NaN());
  for (std::size_t p = 0; p < per_pixel.size(); ++p) {
    if (per_pixel[p].empty()) continue;
    auto series = composite_monthly(per_pixel[p]);
    for (std::size_t m = 0; m < kMonths; ++m) months[m][p] = series[m];
  }
  std::array<RasterGrid, kMonths> grids;
  for (std::size_t m = 0; m < kMonths; ++m) grids[m] = RasterGrid(grid, BandKind::Ndvi, std::move(months[m]));
  return MonthlyStack(std::move(grids));
}

MonthlyStack composite_csv(const std::filesystem::path& path, const GridMeta& grid) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return composite_csv(in, grid);
}

CroplandMask make_mask(RasterGrid grid, const MaskCodes& codes) {
  if (grid.kind() != BandKind::Mask) {
    throw InvalidArgument("mask raster has band kind " + std::string(to_string(grid.kind())) + ", expected MASK");
  }
  for (float& v : grid.values()) {
    if (v == codes.cropland) {
      v = static_cast<float>(MaskClass::Cropland);
    } else if (v == codes.non_cropland) {
      v = static_cast<float>(MaskClass::NonCropland);
    } else if (v == codes.water) {
      v = static_cast<float>(MaskClass::Water);
    } else {
      v = kCategoricalNodata;
    }
  }
  return CroplandMask{std::move(grid)};
}

CroplandMask load_mask(const std::filesystem::path& path, const MaskCodes& codes) {
  return make_mask(read_raster(path), codes);
}

MaskedPixels apply_mask(const MonthlyStack& ndvi, const CroplandMask& mask) {
  if (!(ndvi.meta() == mask.grid.meta())) {
    throw AlignmentError("mask grid " + mask.grid.meta().describe() + " does not match NDVI grid " +
                         ndvi.meta().describe());
  }
  MaskedPixels out;
  const std::size_t n = ndvi.meta().pixel_count();
  std::array<std::span<const float>, kMonths> month;
  for (std::size_t m = 0; m < kMonths; ++m) month[m] = ndvi.month(m).values();

  for (std::size_t p = 0; p < n; ++p) {
    if (!mask.is_cropland(p)) continue;
    bool complete = true;
    for (std::size_t m = 0; m < kMonths && complete; ++m) complete = !std::isnan(month[m][p]);
    if (!complete) continue;
    out.pixel.push_back(p);
    for (std::size_t m = 0; m < kMonths; ++m) out.values.push_back(month[m][p]);
  }
  return out;
}

ClimateStacks load_climate(const std::filesystem::path& precip_path, const std::filesystem::path& temp_path,
                           const GridMeta& target) {
  MonthlyStack precip = read_stack(precip_path);
  MonthlyStack temp = read_stack(temp_path);
  if (precip.kind() != BandKind::PrecipMm) {
    throw InvalidArgument(precip_path.string() + ": expected PRECIP_MM stack, got " +
                          std::string(to_string(precip.kind())));
  }
  if (temp.kind() != BandKind::TempC) {
    throw InvalidArgument(temp_path.string() + ": expected TEMP_C stack, got " + std::string(to_string(temp.kind())));
  }
  return ClimateStacks{resample_nearest(precip, target), resample_nearest(temp, target)};
}

} // namespace irrigrid
