#pragma once

#include "irrigrid/ingest.hpp"
#include "irrigrid/pipeline.hpp"
#include "irrigrid/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace irrigrid::cli {

inline constexpr std::uint64_t kDefaultSeed = 42;

enum class Command { Predict, Consistency, Evaluate, Synth, Metrics, Info };

struct RunConfig {
  Command command = Command::Info;

  std::optional<GeoBox> aoi;
  double pixel_size = kDefaultPixelSize;
  PipelineConfig pipeline;
  MaskCodes mask_codes;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::size_t workers = 1;
  std::string log_level = "warn";

  std::filesystem::path ndvi;
  std::filesystem::path mask;
  std::vector<std::filesystem::path> precip;
  std::vector<std::filesystem::path> temp;
  std::filesystem::path out;
  std::filesystem::path png;
  std::filesystem::path provenance;

  std::filesystem::path raster;
  std::filesystem::path points;
  std::filesystem::path spec;
  std::filesystem::path out_dir;
  std::size_t synth_points = 25;
  std::vector<std::filesystem::path> info_paths;
};

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Thrown by parse_args for --help; what() is the usage text.
class HelpRequested : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Throws UsageError on unknown flags, missing inputs or out-of-range values.
RunConfig parse_args(const std::vector<std::string>& args);

/// Executes a parsed command. Returns 0 on success, 1 on partial tile
/// failure or runtime error. Machine output goes to `out`, diagnostics to
/// `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run with the exit-code contract (2 for usage errors).
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Palette image of a LABEL raster.
void write_label_png(const RasterGrid& labels, const std::filesystem::path& path);

} // namespace irrigrid::cli
