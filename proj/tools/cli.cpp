#include "cli.hpp"

#include "irrigrid/clustering.hpp"
#include "irrigrid/error.hpp"
#include "irrigrid/evaluation.hpp"
#include "irrigrid/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace irrigrid::cli {

namespace {

namespace fs = std::filesystem;

GeoBox parse_aoi(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc{} || ptr != item.data() + item.size()) {
      throw UsageError("--aoi: '" + item + "' is not a number");
    }
    v.push_back(x);
  }
  if (v.size() != 4) throw UsageError("--aoi expects lon0,lat0,lon1,lat1");
  GeoBox box{v[0], v[1], v[2], v[3]};
  try {
    box.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--aoi: ") + e.what());
  }
  return box;
}

MaskCodes parse_mask_codes(const std::string& text) {
  std::vector<float> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stof(item));
    } catch (const std::exception&) {
      throw UsageError("--mask-codes: '" + item + "' is not a number");
    }
  }
  if (v.size() != 3) throw UsageError("--mask-codes expects water,non_cropland,cropland");
  return MaskCodes{v[0], v[1], v[2]};
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("irrigrid");
  if (!logger) {
    logger = spdlog::stderr_color_mt("irrigrid");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_pattern("irrigrid: %l: %v");
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
}

void require_parent_dir(const fs::path& path, const char* flag) {
  auto parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw UsageError(std::string(flag) + ": directory " + parent.string() + " does not exist");
  }
}

bool has_extension(const fs::path& p, const char* ext) {
  auto e = p.extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e == ext;
}

RegionInputs load_region_inputs(const RunConfig& c) {
  RegionInputs in;
  if (has_extension(c.ndvi, ".csv")) {
    const GridMeta grid = geobox_to_grid(*c.aoi, c.pixel_size);
    spdlog::info("compositing observations from {} onto {}x{} grid", c.ndvi.string(), grid.width, grid.height);
    in.ndvi = composite_csv(c.ndvi, grid);
  } else {
    in.ndvi = read_stack(c.ndvi);
  }
  if (in.ndvi.kind() != BandKind::Ndvi) throw InvalidArgument(c.ndvi.string() + ": not an NDVI stack");
  in.mask = load_mask(c.mask, c.mask_codes);
  for (const auto& p : c.precip) {
    in.precip.push_back(read_stack(p));
    if (in.precip.back().kind() != BandKind::PrecipMm) throw InvalidArgument(p.string() + ": not a PRECIP_MM stack");
  }
  for (const auto& p : c.temp) {
    in.temp.push_back(read_stack(p));
    if (in.temp.back().kind() != BandKind::TempC) throw InvalidArgument(p.string() + ": not a TEMP_C stack");
  }
  return in;
}

int run_predict(const RunConfig& c, std::ostream& out) {
  RegionInputs inputs = load_region_inputs(c);
  PredictionRaster pred = predict_region(*c.aoi, inputs, c.pipeline, c.seed, c.workers);
  write_raster(pred.grid, c.out);
  const std::string prov = provenance_jsonl(pred);
  if (c.provenance.empty()) {
    out << prov;
  } else {
    write_text_atomic(c.provenance, prov);
  }
  if (!c.png.empty()) write_label_png(pred.grid, c.png);
  const auto failed = pred.failed_tiles();
  for (const auto& t : pred.provenance) {
    if (t.mode == TileMode::Failed) spdlog::error("tile ({},{}) failed: {}", t.tile.row, t.tile.col, t.error);
    for (const auto& w : t.warnings) spdlog::warn("tile ({},{}): {}", t.tile.row, t.tile.col, w);
  }
  spdlog::info("{} tiles, {} failed", pred.provenance.size(), failed);
  return failed > 0 ? 1 : 0;
}

int run_consistency(const RunConfig& c, std::ostream& out) {
  RegionInputs inputs = load_region_inputs(c);
  ConsistencyReport report = consistency_check(*c.aoi, inputs, c.pipeline, c.seed, c.workers);
  const std::string text = consistency_report_json(report);
  if (c.out.empty()) {
    out << text;
  } else {
    write_text_atomic(c.out, text);
  }
  std::size_t failed = report.base_failed_tiles;
  for (const auto& s : report.shifts) failed += s.failed_tiles;
  return failed > 0 ? 1 : 0;
}

int run_evaluate(const RunConfig& c, std::ostream& out) {
  RasterGrid labels = read_raster(c.raster);
  auto points = read_points_csv(c.points);
  AccuracyReport report = evaluate_points(labels, points);
  const std::string text = accuracy_report_json(report);
  if (!c.out.empty()) write_text_atomic(c.out, text);
  out << text;
  return 0;
}

int run_synth(const RunConfig& c, std::ostream& out) {
  std::ifstream in(c.spec);
  if (!in) throw Error("cannot open " + c.spec.string());
  std::stringstream buf;
  buf << in.rdbuf();
  SynthScene scene = parse_scene_json(buf.str());
  if (c.seed_given) scene.seed = c.seed;
  SynthWorld world = synth_generate(scene, c.pipeline.heuristic);
  fs::create_directories(c.out_dir);
  write_stack(world.ndvi, c.out_dir / "ndvi.irgs");
  write_raster(world.mask.grid, c.out_dir / "mask.irg1");
  write_stack(world.precip, c.out_dir / "precip.irgs");
  write_stack(world.temp, c.out_dir / "temp.irgs");
  write_raster(world.truth, c.out_dir / "truth.irg1");
  auto points = sample_eval_points(world.truth, c.synth_points, mix_seed(scene.seed, 0x9017));
  write_text_atomic(c.out_dir / "points.csv", write_points_csv(points));
  const auto& m = world.truth.meta();
  nlohmann::json j{{"out_dir", c.out_dir.string()},
                   {"width", m.width},
                   {"height", m.height},
                   {"pixel_size", m.pixel_size},
                   {"seed", scene.seed},
                   {"points", points.size()}};
  out << j.dump() << '\n';
  return 0;
}

std::vector<double> read_points_matrix(const fs::path& path, std::size_t& rows) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string item;
    bool numeric = true;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      auto b = item.find_first_not_of(" \t");
      auto e = item.find_last_not_of(" \t");
      std::string_view f = b == std::string::npos ? std::string_view{} : std::string_view(item).substr(b, e - b + 1);
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (line_no == 1) continue; // header
      throw InvalidArgument(path.string() + " line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (row.size() != MonthlyStack::kMonths) {
      throw InvalidArgument(path.string() + " line " + std::to_string(line_no) + ": expected 12 columns, got " +
                            std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  return values;
}

int run_metrics(const RunConfig& c, std::ostream& out) {
  std::size_t rows = 0;
  std::vector<double> values = read_points_matrix(c.points, rows);
  ModelSelection sel = select_model(PointsView{values, MonthlyStack::kMonths}, c.seed, c.pipeline.selection);
  out << selection_csv(sel);
  spdlog::info("selected k = {}", sel.model.k);
  return 0;
}

int run_info(const RunConfig& c, std::ostream& out) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : c.info_paths) {
    auto bytes = read_file_bytes(p);
    nlohmann::json records = nlohmann::json::array();
    for (const auto& h : decode_headers(bytes)) {
      records.push_back({{"offset", h.offset},
                         {"band_kind", std::string(to_string(h.kind))},
                         {"origin_lon", h.meta.origin_lon},
                         {"origin_lat", h.meta.origin_lat},
                         {"pixel_size", h.meta.pixel_size},
                         {"width", h.meta.width},
                         {"height", h.meta.height}});
    }
    files.push_back({{"path", p.string()},
                     {"format", records.size() == 1 ? "IRG1" : "IRGS"},
                     {"bytes", bytes.size()},
                     {"records", std::move(records)}});
  }
  out << files.dump(2) << '\n';
  return 0;
}

void add_heuristic_flags(CLI::App* app, RunConfig& c) {
  auto& h = c.pipeline.heuristic;
  app->add_option("--ndvi-peak", h.ndvi_peak_threshold, "NDVI a season peak must exceed")->capture_default_str();
  app->add_option("--precip-mm", h.precip_threshold_mm, "Monthly crop water need (mm)")->capture_default_str();
  app->add_option("--cold-precip-mm", h.cold_precip_threshold_mm, "Water need for cold seasons (mm)")
      ->capture_default_str();
  app->add_option("--cold-temp-c", h.cold_temp_c, "Temperature below which a season is cold (C)")
      ->capture_default_str();
  app->add_option("--min-peak-sep", h.min_peak_separation_months, "Minimum months between peaks")
      ->capture_default_str();
}

void add_model_flags(CLI::App* app, RunConfig& c) {
  auto& s = c.pipeline.selection;
  app->add_option("--k-min", s.k_lo, "Smallest cluster count tried")->capture_default_str();
  app->add_option("--k-max", s.k_hi, "Largest cluster count tried")->capture_default_str();
  app->add_option("--restarts", s.restarts, "K-means restarts per k")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_seed_flag(CLI::App* app, RunConfig& c) {
  app->add_option_function<std::uint64_t>(
         "--seed",
         [&c](const std::uint64_t& v) {
           c.seed = v;
           c.seed_given = true;
         },
         "Random seed (default 42)");
}

void add_region_flags(CLI::App* app, RunConfig& c, std::string& aoi, std::string& mask_codes, bool need_out) {
  app->add_option("--aoi", aoi, "Area of interest lon0,lat0,lon1,lat1")->required();
  app->add_option("--ndvi", c.ndvi, "NDVI IRGS stack or observation CSV")->check(CLI::ExistingFile);
  app->add_option("--mask", c.mask, "Cropland mask IRG1")->check(CLI::ExistingFile);
  app->add_option("--precip", c.precip, "Precipitation IRGS stack(s), mosaicked in order")
      ->check(CLI::ExistingFile)
      ->take_all();
  app->add_option("--temp", c.temp, "Temperature IRGS stack(s), mosaicked in order")
      ->check(CLI::ExistingFile)
      ->take_all();
  auto* outopt = app->add_option("--out", c.out, need_out ? "Output label raster (IRG1)" : "Report JSON path");
  if (need_out) outopt->required();
  app->add_option("--pixel-size", c.pixel_size, "Pixel size in degrees for CSV compositing")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--workers", c.workers, "Worker threads")->capture_default_str()->check(CLI::Range(1, 4096));
  app->add_option("--tile-edge", c.pipeline.tile_edge, "Tile edge in degrees")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--mask-codes", mask_codes, "Mask product codes water,non_cropland,cropland (default 0,1,2)");
  add_heuristic_flags(app, c);
  add_model_flags(app, c);
  add_seed_flag(app, c);
}

} // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig c;
  if (const char* env = std::getenv("IRRIGRID_LOG")) c.log_level = env;

  CLI::App app{"Irrigated/rainfed cropland classification from monthly NDVI", "irrigrid"};
  app.require_subcommand(1);

  std::string aoi;
  std::string mask_codes;
  std::string inputs_dir;

  auto* predict = app.add_subcommand("predict", "Label cropland pixels of an area of interest");
  add_region_flags(predict, c, aoi, mask_codes, true);
  predict->add_option("--png", c.png, "Also write a color-mapped PNG");
  predict->add_option("--provenance", c.provenance, "Write per-tile JSON lines here instead of stdout");

  auto* consistency = app.add_subcommand("consistency", "Agreement between an aoi and eight shifted copies");
  add_region_flags(consistency, c, aoi, mask_codes, false);
  consistency->add_option("--inputs", inputs_dir, "Directory with ndvi.irgs, mask.irg1, precip.irgs, temp.irgs")
      ->check(CLI::ExistingDirectory);

  auto* evaluate = app.add_subcommand("evaluate", "Point-label accuracy of a prediction raster");
  evaluate->add_option("--raster", c.raster, "Prediction raster (IRG1)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--points", c.points, "CSV with header lon,lat,label")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", c.out, "Also write the report here");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  synth->add_option("--spec", c.spec, "Scene JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out-dir", c.out_dir, "Output directory")->required();
  synth->add_option("--points", c.synth_points, "Evaluation points to sample")->capture_default_str();
  add_seed_flag(synth, c);
  add_heuristic_flags(synth, c);

  auto* metrics = app.add_subcommand("metrics", "Cluster-quality table for a 12-column points CSV");
  metrics->add_option("--points", c.points, "Points CSV (12 numeric columns)")->required()->check(CLI::ExistingFile);
  add_model_flags(metrics, c);
  add_seed_flag(metrics, c);

  auto* info = app.add_subcommand("info", "Dump IRG1/IRGS headers");
  info->add_option("paths", c.info_paths, "Raster files")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    throw HelpRequested(target->help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (predict->parsed()) c.command = Command::Predict;
  if (consistency->parsed()) c.command = Command::Consistency;
  if (evaluate->parsed()) c.command = Command::Evaluate;
  if (synth->parsed()) c.command = Command::Synth;
  if (metrics->parsed()) c.command = Command::Metrics;
  if (info->parsed()) c.command = Command::Info;

  if (c.command == Command::Predict || c.command == Command::Consistency) {
    c.aoi = parse_aoi(aoi);
    if (!mask_codes.empty()) c.mask_codes = parse_mask_codes(mask_codes);
    if (!inputs_dir.empty()) {
      fs::path d(inputs_dir);
      if (c.ndvi.empty()) c.ndvi = d / "ndvi.irgs";
      if (c.mask.empty()) c.mask = d / "mask.irg1";
      if (c.precip.empty()) c.precip.push_back(d / "precip.irgs");
      if (c.temp.empty()) c.temp.push_back(d / "temp.irgs");
    }
    if (c.ndvi.empty() || c.mask.empty() || c.precip.empty() || c.temp.empty()) {
      throw UsageError("--ndvi, --mask, --precip and --temp are required");
    }
    for (const auto* p : {&c.ndvi, &c.mask}) {
      if (!fs::is_regular_file(*p)) throw UsageError("input " + p->string() + " does not exist");
    }
    for (const auto& p : c.precip) {
      if (!fs::is_regular_file(p)) throw UsageError("input " + p.string() + " does not exist");
    }
    for (const auto& p : c.temp) {
      if (!fs::is_regular_file(p)) throw UsageError("input " + p.string() + " does not exist");
    }
    if (!c.out.empty()) require_parent_dir(c.out, "--out");
    if (!c.png.empty()) require_parent_dir(c.png, "--png");
    if (!c.provenance.empty()) require_parent_dir(c.provenance, "--provenance");
  }
  if (c.command == Command::Evaluate && !c.out.empty()) require_parent_dir(c.out, "--out");

  if (c.command != Command::Info && c.command != Command::Evaluate) {
    try {
      c.pipeline.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  return c;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  configure_logging(config.log_level);
  try {
    switch (config.command) {
    case Command::Predict: return run_predict(config, out);
    case Command::Consistency: return run_consistency(config, out);
    case Command::Evaluate: return run_evaluate(config, out);
    case Command::Synth: return run_synth(config, out);
    case Command::Metrics: return run_metrics(config, out);
    case Command::Info: return run_info(config, out);
    }
  } catch (const std::exception& e) {
    err << "irrigrid: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const UsageError& e) {
    err << "irrigrid: usage error: " << e.what() << "\nRun 'irrigrid --help' for usage.\n";
    return 2;
  }
  return run(config, out, err);
}

} // namespace irrigrid::cli
