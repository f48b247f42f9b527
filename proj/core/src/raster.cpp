#include "irrigrid/raster.hpp"

#include "irrigrid/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace irrigrid {

namespace {

constexpr std::uint32_t kCanonicalNanBits = 0x7fc00000u;

float canonical(float v) {
  return std::isnan(v) ? std::bit_cast<float>(kCanonicalNanBits) : v;
}

// Little-endian field codec. Host byte order is normalised with byteswap-free
// shifts so the format is identical on any platform.
class ByteWriter {
public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(canonical(v))); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void reserve(std::size_t n) { out_.reserve(out_.size() + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(pos_, std::string("truncated ") + what + ": need " + std::to_string(n) +
                                  " bytes, have " + std::to_string(remaining()));
    }
  }
  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  float f32_unchecked() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return canonical(std::bit_cast<float>(v));
  }

private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Largest grid we agree to allocate: 2^31 pixels (8 GiB of payload).
constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 31;

void encode_into(ByteWriter& w, const RasterGrid& grid) {
  const auto& m = grid.meta();
  w.reserve(kIrg1HeaderBytes + 4 * m.pixel_count());
  w.bytes("IRG1");
  w.u8(static_cast<std::uint8_t>(grid.kind()));
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.f64(m.origin_lon);
  w.f64(m.origin_lat);
  w.f64(m.pixel_size);
  w.u32(m.width);
  w.u32(m.height);
  for (float v : grid.values()) w.f32(v);
}

RasterHeader decode_header(ByteReader& r, std::uint64_t base) {
  RasterHeader h;
  h.offset = base + r.pos();
  const auto at = [&](std::uint64_t local) { return base + local; };

  std::uint64_t magic_pos = r.pos();
  if (r.remaining() < 4) throw FormatError(at(magic_pos), "truncated magic");
  auto magic = r.bytes(4, "magic");
  if (magic != "IRG1") {
    throw FormatError(at(magic_pos), "bad magic \"" + std::string(magic) + "\", expected \"IRG1\"");
  }
  std::uint64_t kind_pos = r.pos();
  std::uint8_t kind = r.u8("band kind");
  if (kind > static_cast<std::uint8_t>(BandKind::Label)) {
    throw FormatError(at(kind_pos), "unknown band kind " + std::to_string(kind));
  }
  h.kind = static_cast<BandKind>(kind);
  r.bytes(3, "reserved bytes");

  std::uint64_t geo_pos = r.pos();
  h.meta.origin_lon = r.f64("origin_lon");
  h.meta.origin_lat = r.f64("origin_lat");
  std::uint64_t size_pos = r.pos();
  h.meta.pixel_size = r.f64("pixel_size");
  if (!std::isfinite(h.meta.origin_lon) || !std::isfinite(h.meta.origin_lat)) {
    throw FormatError(at(geo_pos), "non-finite origin");
  }
  if (!(h.meta.pixel_size > 0.0) || !std::isfinite(h.meta.pixel_size)) {
    throw FormatError(at(size_pos), "pixel_size must be positive and finite");
  }
  std::uint64_t width_pos = r.pos();
  h.meta.width = r.u32("width");
  std::uint64_t height_pos = r.pos();
  h.meta.height = r.u32("height");
  if (h.meta.width == 0) throw FormatError(at(width_pos), "width is zero");
  if (h.meta.height == 0) throw FormatError(at(height_pos), "height is zero");
  if (std::uint64_t{h.meta.width} * h.meta.height > kMaxPixels) {
    throw FormatError(at(width_pos), "dimensions " + std::to_string(h.meta.width) + "x" +
                                         std::to_string(h.meta.height) + " overflow the pixel limit");
  }
  std::uint64_t payload = 4 * std::uint64_t{h.meta.width} * h.meta.height;
  if (r.remaining() < payload) {
    throw FormatError(at(r.pos()), "truncated payload: need " + std::to_string(payload) + " bytes, have " +
                                       std::to_string(r.remaining()));
  }
  return h;
}

RasterGrid decode_record(ByteReader& r, std::uint64_t base) {
  RasterHeader h = decode_header(r, base);
  std::vector<float> values(h.meta.pixel_count());
  for (float& v : values) v = r.f32_unchecked();
  return RasterGrid(h.meta, h.kind, std::move(values));
}

void check_stack_magic(ByteReader& r) {
  if (r.remaining() < 4) throw FormatError(0, "truncated magic");
  auto magic = r.bytes(4, "magic");
  if (magic != "IRGS") throw FormatError(0, "bad magic \"" + std::string(magic) + "\", expected \"IRGS\"");
  std::uint64_t count_pos = r.pos();
  std::uint8_t count = r.u8("month count");
  if (count != MonthlyStack::kMonths) {
    throw FormatError(count_pos, "month_count is " + std::to_string(count) + ", must be 12");
  }
}

std::int64_t snap_index(double coord) { return static_cast<std::int64_t>(std::llround(coord)); }

} // namespace

// --- geometry ---------------------------------------------------------------

void GeoBox::validate() const {
  const auto finite = std::isfinite(lon_min) && std::isfinite(lon_max) && std::isfinite(lat_min) &&
                      std::isfinite(lat_max);
  if (!finite) throw InvalidArgument("geobox has non-finite corners");
  if (!(lon_min < lon_max) || !(lat_min < lat_max)) {
    std::ostringstream os;
    os << "degenerate or inverted geobox (" << lon_min << "," << lat_min << ")-(" << lon_max << ","
       << lat_max << ")";
    throw InvalidArgument(os.str());
  }
  if (lon_min < -180.0 || lon_max > 180.0 || lat_min < -90.0 || lat_max > 90.0) {
    throw InvalidArgument("geobox corner outside [-180,180]x[-90,90]");
  }
}

GeoBox GridMeta::geobox() const {
  return GeoBox{origin_lon, origin_lat - height * pixel_size, origin_lon + width * pixel_size, origin_lat};
}

void GridMeta::validate() const {
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) throw InvalidArgument("pixel_size must be > 0");
  if (width < 1 || height < 1) throw InvalidArgument("grid must be at least 1x1");
  if (!std::isfinite(origin_lon) || !std::isfinite(origin_lat)) throw InvalidArgument("non-finite grid origin");
}

std::string GridMeta::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "{origin=(" << origin_lon << "," << origin_lat << ") pixel_size=" << pixel_size << " size=" << width
     << "x" << height << "}";
  return os.str();
}

std::uint32_t pixels_to_cover(double extent, double step) {
  double n = extent / step;
  double nearest = std::round(n);
  double count = std::abs(n - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest : std::ceil(n);
  if (count > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    throw InvalidArgument("grid extent overflows 32-bit pixel count");
  }
  return static_cast<std::uint32_t>(std::max(1.0, count));
}

GridMeta geobox_to_grid(const GeoBox& box, double pixel_size) {
  box.validate();
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) throw InvalidArgument("pixel_size must be > 0");
  GridMeta meta;
  meta.origin_lon = box.lon_min;
  meta.origin_lat = box.lat_max;
  meta.pixel_size = pixel_size;
  meta.width = pixels_to_cover(box.width(), pixel_size);
  meta.height = pixels_to_cover(box.height(), pixel_size);
  return meta;
}

// --- bands ------------------------------------------------------------------

std::string_view to_string(BandKind kind) {
  switch (kind) {
  case BandKind::Ndvi: return "NDVI";
  case BandKind::PrecipMm: return "PRECIP_MM";
  case BandKind::TempC: return "TEMP_C";
  case BandKind::Mask: return "MASK";
  case BandKind::Label: return "LABEL";
  }
  return "UNKNOWN";
}

bool is_categorical(BandKind kind) { return kind == BandKind::Mask || kind == BandKind::Label; }

float nodata_value(BandKind kind) {
  return is_categorical(kind) ? kCategoricalNodata : std::bit_cast<float>(kCanonicalNanBits);
}

bool is_nodata(BandKind kind, float value) {
  return is_categorical(kind) ? value == kCategoricalNodata || std::isnan(value) : std::isnan(value);
}

RasterGrid::RasterGrid(GridMeta meta, BandKind kind)
    : meta_(meta), kind_(kind), values_(meta.pixel_count(), nodata_value(kind)) {
  meta_.validate();
}

RasterGrid::RasterGrid(GridMeta meta, BandKind kind, std::vector<float> values)
    : meta_(meta), kind_(kind), values_(std::move(values)) {
  meta_.validate();
  if (values_.size() != meta_.pixel_count()) {
    throw InvalidArgument("raster has " + std::to_string(values_.size()) + " values for a " +
                          std::to_string(meta_.width) + "x" + std::to_string(meta_.height) + " grid");
  }
}

void RasterGrid::validate_values() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    float v = values_[i];
    if (nodata_at(i)) continue;
    bool ok = true;
    switch (kind_) {
    case BandKind::Ndvi: ok = v >= -1.0f && v <= 1.0f; break;
    case BandKind::PrecipMm: ok = v >= 0.0f && std::isfinite(v); break;
    case BandKind::TempC: ok = std::isfinite(v); break;
    case BandKind::Mask:
    case BandKind::Label: ok = v == 0.0f || v == 1.0f || v == 2.0f || v == 3.0f; break;
    }
    if (!ok) {
      std::ostringstream os;
      os << to_string(kind_) << " value " << v << " out of domain at row " << i / meta_.width << " col "
         << i % meta_.width;
      throw InvalidArgument(os.str());
    }
  }
}

RasterGrid RasterGrid::window(const PixelWindow& w) const {
  if (w.empty() || !window_inside(meta_, w)) throw InvalidArgument("window exceeds grid " + meta_.describe());
  GridMeta m = window_meta(meta_, w);
  std::vector<float> out;
  out.reserve(m.pixel_count());
  for (std::uint32_t r = 0; r < w.height; ++r) {
    auto begin = values_.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(w.row0) + r) * meta_.width +
                                                               static_cast<std::size_t>(w.col0));
    out.insert(out.end(), begin, begin + w.width);
  }
  return RasterGrid(m, kind_, std::move(out));
}

bool RasterGrid::operator==(const RasterGrid& other) const { return bit_identical(*this, other); }

bool bit_identical(const RasterGrid& a, const RasterGrid& b) {
  if (!(a.meta() == b.meta()) || a.kind() != b.kind()) return false;
  auto va = a.values();
  auto vb = b.values();
  return va.size() == vb.size() &&
         std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) == 0;
}

MonthlyStack::MonthlyStack(std::array<RasterGrid, kMonths> months) : months_(std::move(months)) {
  for (std::size_t m = 1; m < kMonths; ++m) {
    if (!(months_[m].meta() == months_[0].meta())) {
      throw AlignmentError("month " + std::to_string(m + 1) + " grid " + months_[m].meta().describe() +
                           " differs from January grid " + months_[0].meta().describe());
    }
    if (months_[m].kind() != months_[0].kind()) {
      throw InvalidArgument("month " + std::to_string(m + 1) + " band kind differs from January");
    }
  }
}

std::array<float, MonthlyStack::kMonths> MonthlyStack::series(std::size_t pixel) const {
  std::array<float, kMonths> out{};
  for (std::size_t m = 0; m < kMonths; ++m) out[m] = months_[m].values()[pixel];
  return out;
}

MonthlyStack MonthlyStack::window(const PixelWindow& w) const {
  std::array<RasterGrid, kMonths> out;
  for (std::size_t m = 0; m < kMonths; ++m) out[m] = months_[m].window(w);
  return MonthlyStack(std::move(out));
}

// --- IRG1 / IRGS ------------------------------------------------------------

std::vector<std::uint8_t> encode_raster(const RasterGrid& grid) {
  ByteWriter w;
  encode_into(w, grid);
  return w.take();
}

RasterGrid decode_raster(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  RasterGrid grid = decode_record(r, 0);
  if (r.remaining() != 0) {
    throw FormatError(r.pos(), std::to_string(r.remaining()) + " trailing bytes after payload");
  }
  return grid;
}

std::vector<std::uint8_t> encode_stack(const MonthlyStack& stack) {
  ByteWriter w;
  w.bytes("IRGS");
  w.u8(static_cast<std::uint8_t>(MonthlyStack::kMonths));
  for (const auto& g : stack.months()) encode_into(w, g);
  return w.take();
}

MonthlyStack decode_stack(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  check_stack_magic(r);
  std::array<RasterGrid, MonthlyStack::kMonths> months;
  for (std::size_t m = 0; m < MonthlyStack::kMonths; ++m) {
    auto start = r.pos();
    ByteReader sub(bytes.subspan(start));
    months[m] = decode_record(sub, start);
    r.bytes(sub.pos(), "record");
  }
  if (r.remaining() != 0) {
    throw FormatError(r.pos(), std::to_string(r.remaining()) + " trailing bytes after 12th record");
  }
  return MonthlyStack(std::move(months));
}

std::vector<RasterHeader> decode_headers(std::span<const std::uint8_t> bytes) {
  std::vector<RasterHeader> out;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "IRGS", 4) == 0) {
    ByteReader r(bytes);
    check_stack_magic(r);
    for (std::size_t m = 0; m < MonthlyStack::kMonths; ++m) {
      auto start = r.pos();
      ByteReader sub(bytes.subspan(start));
      RasterHeader h = decode_header(sub, start);
      out.push_back(h);
      r.bytes(sub.pos() + 4 * h.meta.pixel_count(), "record");
    }
  } else {
    ByteReader r(bytes);
    out.push_back(decode_header(r, 0));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), size)) {
    throw Error("failed reading " + path.string());
  }
  return data;
}

RasterGrid read_raster(const std::filesystem::path& path) {
  return decode_raster(read_file_bytes(path));
}

MonthlyStack read_stack(const std::filesystem::path& path) {
  return decode_stack(read_file_bytes(path));
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_raster(const RasterGrid& grid, const std::filesystem::path& path) {
  write_file_atomic(path, encode_raster(grid));
}

void write_stack(const MonthlyStack& stack, const std::filesystem::path& path) {
  write_file_atomic(path, encode_stack(stack));
}

// --- resampling -------------------------------------------------------------

RasterGrid resample_nearest(const RasterGrid& src, const GridMeta& dst) {
  dst.validate();
  const GeoBox sb = src.meta().geobox();
  const GeoBox db = dst.geobox();
  if (!(sb.lon_min < db.lon_max && db.lon_min < sb.lon_max && sb.lat_min < db.lat_max &&
        db.lat_min < sb.lat_max)) {
    throw InvalidArgument("resample: source " + src.meta().describe() + " does not overlap destination " +
                          dst.describe());
  }
  RasterGrid out(dst, src.kind());
  auto values = out.values();
  for (std::uint32_t r = 0; r < dst.height; ++r) {
    const double lat = dst.center_lat(r);
    for (std::uint32_t c = 0; c < dst.width; ++c) {
      std::size_t sr = 0;
      std::size_t sc = 0;
      if (locate_pixel(src.meta(), dst.center_lon(c), lat, sr, sc)) {
        values[std::size_t{r} * dst.width + c] = src.at(sr, sc);
      }
    }
  }
  return out;
}

MonthlyStack resample_nearest(const MonthlyStack& src, const GridMeta& dst) {
  std::array<RasterGrid, MonthlyStack::kMonths> out;
  for (std::size_t m = 0; m < MonthlyStack::kMonths; ++m) out[m] = resample_nearest(src.month(m), dst);
  return MonthlyStack(std::move(out));
}

PixelWindow snap_to_lattice(const GridMeta& parent, const GeoBox& box) {
  const double ps = parent.pixel_size;
  std::int64_t c0 = snap_index((box.lon_min - parent.origin_lon) / ps);
  std::int64_t c1 = snap_index((box.lon_max - parent.origin_lon) / ps);
  std::int64_t r0 = snap_index((parent.origin_lat - box.lat_max) / ps);
  std::int64_t r1 = snap_index((parent.origin_lat - box.lat_min) / ps);
  PixelWindow w;
  w.row0 = r0;
  w.col0 = c0;
  w.height = r1 > r0 ? static_cast<std::uint32_t>(r1 - r0) : 0;
  w.width = c1 > c0 ? static_cast<std::uint32_t>(c1 - c0) : 0;
  return w;
}

bool window_inside(const GridMeta& parent, const PixelWindow& w) {
  return w.row0 >= 0 && w.col0 >= 0 && w.row0 + std::int64_t{w.height} <= std::int64_t{parent.height} &&
         w.col0 + std::int64_t{w.width} <= std::int64_t{parent.width};
}

GridMeta window_meta(const GridMeta& parent, const PixelWindow& w) {
  if (w.empty()) throw InvalidArgument("empty pixel window");
  GridMeta m = parent;
  m.origin_lon = parent.origin_lon + static_cast<double>(w.col0) * parent.pixel_size;
  m.origin_lat = parent.origin_lat - static_cast<double>(w.row0) * parent.pixel_size;
  m.width = w.width;
  m.height = w.height;
  return m;
}

bool locate_pixel(const GridMeta& grid, double lon, double lat, std::size_t& row, std::size_t& col) {
  double c = std::floor((lon - grid.origin_lon) / grid.pixel_size);
  double r = std::floor((grid.origin_lat - lat) / grid.pixel_size);
  if (!(c >= 0.0) || !(r >= 0.0) || c >= grid.width || r >= grid.height) return false;
  row = static_cast<std::size_t>(r);
  col = static_cast<std::size_t>(c);
  return true;
}

} // namespace irrigrid
