#include "cli.hpp"

#include "irrigrid/error.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdio>
#include <unistd.h>

namespace irrigrid::cli {

namespace {

// RGBA per label code; rainfed red and irrigated green.
std::array<std::uint8_t, 4> color(float code) {
  if (code == label_value(LabelCode::Rainfed)) return {214, 39, 40, 255};
  if (code == label_value(LabelCode::Irrigated)) return {44, 160, 44, 255};
  if (code == label_value(LabelCode::NotCultivated)) return {188, 189, 34, 255};
  if (code == label_value(LabelCode::NonCropland)) return {220, 220, 220, 255};
  return {0, 0, 0, 0};
}

} // namespace

void write_label_png(const RasterGrid& labels, const std::filesystem::path& path) {
  const auto& m = labels.meta();
  std::vector<std::uint8_t> rgba(m.pixel_count() * 4);
  for (std::size_t p = 0; p < m.pixel_count(); ++p) {
    auto c = color(labels.values()[p]);
    std::copy(c.begin(), c.end(), rgba.begin() + static_cast<std::ptrdiff_t>(4 * p));
  }

  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  std::FILE* fp = std::fopen(tmp.c_str(), "wb");
  if (!fp) throw Error("cannot open " + tmp.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    std::filesystem::remove(tmp);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, m.width, m.height, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t r = 0; r < m.height; ++r) png_write_row(png, rgba.data() + std::size_t{r} * m.width * 4);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);

  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename onto " + path.string());
  }
}

} // namespace irrigrid::cli
