#pragma once

#include "irrigrid/evaluation.hpp"
#include "irrigrid/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testing_support {

// One 0.5 degree tile split into an irrigated west half peaking in March
// and a rainfed east half peaking in August; 200 x 200 cropland pixels.
inline irrigrid::SynthScene two_population_tile(double sigma, std::uint64_t seed) {
  irrigrid::SynthScene s;
  s.extent = {0.0, 0.0, 0.5, 0.5};
  s.pixel_size = 0.0025;
  s.noise_sigma = sigma;
  s.seed = seed;
  irrigrid::SynthRegion west;
  west.box = {0.0, 0.0, 0.25, 0.5};
  west.irrigated = true;
  west.peak_month = 3;
  irrigrid::SynthRegion east;
  east.box = {0.25, 0.0, 0.5, 0.5};
  east.irrigated = false;
  east.peak_month = 8;
  s.regions = {west, east};
  return s;
}

// 2 x 2 tiles with three populations and a non-cropland strip.
inline irrigrid::SynthScene four_tile_scene(double sigma, std::uint64_t seed, double pixel_size = 0.01) {
  irrigrid::SynthScene s;
  s.extent = {0.0, 0.0, 1.0, 1.0};
  s.pixel_size = pixel_size;
  s.noise_sigma = sigma;
  s.seed = seed;
  irrigrid::SynthRegion a;
  a.box = {0.0, 0.0, 0.6, 1.0};
  a.irrigated = true;
  a.peak_month = 3;
  irrigrid::SynthRegion b;
  b.box = {0.6, 0.5, 0.9, 1.0};
  b.peak_month = 8;
  irrigrid::SynthRegion c;
  c.box = {0.6, 0.0, 0.9, 0.5};
  c.peak_month = 11;
  c.peak_ndvi = 0.7;
  c.irrigated = true;
  s.regions = {a, b, c};
  return s;
}

// Large regions relative to a third of a 0.7 degree aoi, with the margin
// the shifted regions need.
inline irrigrid::SynthScene consistency_scene() {
  irrigrid::SynthScene s;
  s.extent = {0.0, 0.0, 1.5, 1.5};
  s.pixel_size = 0.01;
  s.seed = 3;
  irrigrid::SynthRegion a;
  a.box = {0.0, 0.0, 0.75, 1.5};
  a.irrigated = true;
  a.peak_month = 3;
  irrigrid::SynthRegion b;
  b.box = {0.75, 0.75, 1.5, 1.5};
  b.peak_month = 8;
  irrigrid::SynthRegion c;
  c.box = {0.75, 0.0, 1.5, 0.75};
  c.peak_month = 11;
  c.peak_ndvi = 0.7;
  s.regions = {a, b, c};
  return s;
}

inline irrigrid::RegionInputs region_inputs(const irrigrid::SynthWorld& w) {
  irrigrid::RegionInputs in;
  in.ndvi = w.ndvi;
  in.mask = w.mask;
  in.precip = {w.precip};
  in.temp = {w.temp};
  return in;
}

// Fraction of cropland truth pixels whose predicted label matches.
inline double cropland_recovery(const irrigrid::RasterGrid& predicted, const irrigrid::RasterGrid& truth) {
  std::size_t total = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.values().size(); ++i) {
    float t = truth.values()[i];
    if (t > 2.0f) continue;
    ++total;
    if (predicted.values()[i] == t) ++hit;
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("irrigrid-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace testing_support
