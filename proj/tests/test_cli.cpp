#include "cli.hpp"

#include "irrigrid/evaluation.hpp"

#include "support/scenes.hpp"

#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace irrigrid;
using irrigrid::cli::main_entry;
using irrigrid::cli::parse_args;
using testing_support::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = main_entry(args, out, err);
  return {code, out.str(), err.str()};
}

void touch(const std::filesystem::path& p) { std::ofstream(p) << "x"; }

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kScene = R"({"extent":[0,0,1,1],"pixel_size":0.01,"noise_sigma":0.02,"seed":5,
  "regions":[{"box":[0,0,0.6,1],"irrigated":true,"peak_month":3},
             {"box":[0.6,0,1,1],"irrigated":false,"peak_month":8}]})";

} // namespace

TEST_CASE("parse_args predict defaults") {
  TempDir d;
  for (auto n : {"a", "b", "c", "d"}) touch(d / n);
  auto c = parse_args({"predict", "--aoi", "0,0,0.5,0.5", "--ndvi", (d / "a").string(), "--mask", (d / "b").string(),
                       "--precip", (d / "c").string(), "--temp", (d / "d").string(), "--out", (d / "e").string()});
  CHECK(c.command == cli::Command::Predict);
  CHECK(c.aoi.value() == GeoBox{0, 0, 0.5, 0.5});
  CHECK(c.seed == 42);
  CHECK(c.workers == 1);
  CHECK(c.pixel_size == kDefaultPixelSize);
  CHECK(c.pipeline.heuristic.ndvi_peak_threshold == 0.3);
  CHECK(c.pipeline.selection.k_hi == 6);
  CHECK(c.precip.size() == 1);
}

TEST_CASE("usage errors exit 2") {
  TempDir d;
  for (auto n : {"a", "b", "c", "d"}) touch(d / n);
  std::vector<std::string> base{"predict", "--ndvi", (d / "a").string(), "--mask", (d / "b").string(),
                                "--precip", (d / "c").string(), "--temp", (d / "d").string(), "--out",
                                (d / "e").string()};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  CHECK(with({"--aoi", "0,0,0.5,0.5", "--workers", "0"}).code == 2);
  CHECK(with({"--aoi", "1,1,0,0"}).code == 2);
  CHECK(with({"--aoi", "0,0,1"}).code == 2);
  CHECK(with({"--aoi", "0,0,1,1", "--k-min", "1"}).code == 2);
  CHECK(with({"--aoi", "0,0,1,1", "--k-min", "5", "--k-max", "3"}).code == 2);
  CHECK(with({"--aoi", "0,0,1,1", "--pixel-size", "0"}).code == 2);
  CHECK(with({"--aoi", "0,0,1,1", "--bogus"}).code == 2);
  CHECK(with({"--aoi", "0,0,1,1", "--cold-precip-mm", "150"}).code == 2);
  CHECK(run({"predict", "--aoi", "0,0,1,1", "--ndvi", (d / "missing").string()}).code == 2);
  CHECK(run({}).code == 2);
  auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("predict") != std::string::npos);
}

TEST_CASE("synth, predict, evaluate, info round trip") {
  TempDir d;
  write(d / "scene.json", kScene);
  auto synth = run({"synth", "--spec", (d / "scene.json").string(), "--out-dir", (d / "w").string()});
  REQUIRE(synth.code == 0);
  for (auto n : {"ndvi.irgs", "mask.irg1", "precip.irgs", "temp.irgs", "truth.irg1", "points.csv"}) {
    CHECK(std::filesystem::exists(d / "w" / n));
  }

  auto w = d / "w";
  auto predict = run({"predict", "--aoi", "0,0,1,1", "--ndvi", (w / "ndvi.irgs").string(), "--mask",
                      (w / "mask.irg1").string(), "--precip", (w / "precip.irgs").string(), "--temp",
                      (w / "temp.irgs").string(), "--out", (d / "pred.irg1").string(), "--png",
                      (d / "pred.png").string(), "--workers", "2"});
  REQUIRE(predict.code == 0);
  std::istringstream lines(predict.out);
  std::string line;
  int records = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("seed"));
    CHECK(j.contains("quality"));
    ++records;
  }
  CHECK(records == 4);
  CHECK(std::filesystem::file_size(d / "pred.png") > 0);

  auto eval = run({"evaluate", "--raster", (d / "pred.irg1").string(), "--points", (w / "points.csv").string(),
                   "--out", (d / "acc.json").string()});
  REQUIRE(eval.code == 0);
  auto acc = nlohmann::json::parse(eval.out);
  CHECK(acc["n"] == 25);
  CHECK(acc["accuracy"].get<double>() >= 0.95);
  CHECK(std::filesystem::exists(d / "acc.json"));

  auto info = run({"info", (w / "ndvi.irgs").string(), (d / "pred.irg1").string()});
  REQUIRE(info.code == 0);
  auto j = nlohmann::json::parse(info.out);
  CHECK(j[0]["format"] == "IRGS");
  CHECK(j[0]["records"].size() == 12);
  CHECK(j[1]["records"][0]["band_kind"] == "LABEL");

  // Same seed, same bytes.
  auto again = run({"predict", "--aoi", "0,0,1,1", "--ndvi", (w / "ndvi.irgs").string(), "--mask",
                    (w / "mask.irg1").string(), "--precip", (w / "precip.irgs").string(), "--temp",
                    (w / "temp.irgs").string(), "--out", (d / "pred2.irg1").string(), "--provenance",
                    (d / "prov.jsonl").string()});
  REQUIRE(again.code == 0);
  CHECK(again.out.empty());
  CHECK(read_file_bytes(d / "pred.irg1") == read_file_bytes(d / "pred2.irg1"));
}

TEST_CASE("missing climate for one tile exits 1") {
  TempDir d;
  write(d / "scene.json", kScene);
  REQUIRE(run({"synth", "--spec", (d / "scene.json").string(), "--out-dir", (d / "w").string()}).code == 0);
  auto precip = read_stack(d / "w" / "precip.irgs");
  auto temp = read_stack(d / "w" / "temp.irgs");
  std::vector<std::string> args{"predict", "--aoi", "0,0,1,1", "--ndvi", (d / "w" / "ndvi.irgs").string(), "--mask",
                                (d / "w" / "mask.irg1").string(), "--out", (d / "pred.irg1").string(),
                                "--provenance", (d / "prov.jsonl").string()};
  int written = 0;
  for (const auto& t : tile_aoi({0, 0, 1, 1})) {
    if (t.row == 1 && t.col == 1) continue;
    auto w = snap_to_lattice(precip.meta(), t.box);
    auto p = d / ("p" + std::to_string(written) + ".irgs");
    auto q = d / ("t" + std::to_string(written) + ".irgs");
    write_stack(precip.window(w), p);
    write_stack(temp.window(w), q);
    args.insert(args.end(), {"--precip", p.string(), "--temp", q.string()});
    ++written;
  }
  auto r = run(args);
  CHECK(r.code == 1);
  auto pred = read_raster(d / "pred.irg1");
  std::ifstream prov(d / "prov.jsonl");
  std::string line;
  int failed = 0, labelled = 0;
  while (std::getline(prov, line)) {
    auto j = nlohmann::json::parse(line);
    if (j["mode"] == "failed") {
      ++failed;
      CHECK(j["error"].get<std::string>().find("precipitation") != std::string::npos);
    } else {
      ++labelled;
    }
  }
  CHECK(failed == 1);
  CHECK(labelled == 3);
  CHECK(pred.at(99, 99) == 255.0f);
  CHECK(pred.at(0, 0) == 1.0f);
}

TEST_CASE("evaluate with nothing scorable") {
  TempDir d;
  write_raster(RasterGrid(GridMeta{0, 1, 0.5, 2, 2}, BandKind::Label), d / "empty.irg1");
  write(d / "pts.csv", "lon,lat,label\n0.25,0.75,irrigated\n0.75,0.25,rainfed\n");
  auto r = run({"evaluate", "--raster", (d / "empty.irg1").string(), "--points", (d / "pts.csv").string()});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["accuracy"].is_null());
  CHECK(j["unscorable"] == 2);
}

TEST_CASE("metrics prints the selection table") {
  TempDir d;
  std::ostringstream csv;
  csv << "m1,m2,m3,m4,m5,m6,m7,m8,m9,m10,m11,m12\n";
  for (int i = 0; i < 30; ++i) {
    for (int m = 0; m < 12; ++m) csv << (m ? "," : "") << (i < 15 ? 0.1 : 0.7) + 0.001 * ((i * 7 + m) % 5);
    csv << "\n";
  }
  write(d / "pts.csv", csv.str());
  auto r = run({"metrics", "--points", (d / "pts.csv").string(), "--k-max", "4"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "k,inertia,silhouette,calinski_harabasz,davies_bouldin");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3);

  write(d / "bad.csv", "1,2,3\n");
  CHECK(run({"metrics", "--points", (d / "bad.csv").string()}).code == 1);
}

TEST_CASE("consistency subcommand") {
  TempDir d;
  write(d / "scene.json", R"({"extent":[0,0,1.5,1.5],"pixel_size":0.02,
    "regions":[{"box":[0,0,0.75,1.5],"irrigated":true,"peak_month":3},
               {"box":[0.75,0,1.5,1.5],"peak_month":8}]})");
  REQUIRE(run({"synth", "--spec", (d / "scene.json").string(), "--out-dir", (d / "w").string()}).code == 0);
  auto r = run({"consistency", "--aoi", "0.4,0.4,1.1,1.1", "--inputs", (d / "w").string(), "--out",
                (d / "report.json").string()});
  REQUIRE(r.code == 0);
  std::ifstream in(d / "report.json");
  auto j = nlohmann::json::parse(in);
  CHECK(j["overall"] == 1.0);
  CHECK(j["shifts"].size() == 8);

  auto bad = run({"consistency", "--aoi", "0.1,0.1,1.4,1.4", "--inputs", (d / "w").string()});
  CHECK(bad.code == 1);
}

TEST_CASE("observation CSV input") {
  TempDir d;
  std::ostringstream csv;
  csv << "pixel_row,pixel_col,date,nir,red,valid\n";
  // 4 x 4 pixels at 0.125 degrees; the west half peaks in March.
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      for (int m = 1; m <= 12; ++m) {
        int peak = c < 2 ? 3 : 8;
        double ndvi = m == peak ? 0.6 : 0.1;
        double nir = (1 + ndvi) / (1 - ndvi) * 0.1;
        csv << r << ',' << c << ",2022-" << (m < 10 ? "0" : "") << m << "-14," << nir << ",0.1,1\n";
      }
    }
  }
  write(d / "obs.csv", csv.str());
  GridMeta g{0.0, 0.5, 0.125, 4, 4};
  write_raster(RasterGrid(g, BandKind::Mask, std::vector<float>(16, 2.0f)), d / "mask.irg1");
  std::array<RasterGrid, 12> p, t;
  GridMeta coarse{0.0, 0.5, 0.5, 1, 1};
  for (int m = 0; m < 12; ++m) {
    p[m] = RasterGrid(coarse, BandKind::PrecipMm, {m == 1 || m == 2 ? 20.0f : (m == 6 || m == 7 ? 150.0f : 60.0f)});
    t[m] = RasterGrid(coarse, BandKind::TempC, {25.0f});
  }
  write_stack(MonthlyStack(p), d / "p.irgs");
  write_stack(MonthlyStack(t), d / "t.irgs");
  auto r = run({"predict", "--aoi", "0,0,0.5,0.5", "--pixel-size", "0.125", "--ndvi", (d / "obs.csv").string(),
                "--mask", (d / "mask.irg1").string(), "--precip", (d / "p.irgs").string(), "--temp",
                (d / "t.irgs").string(), "--out", (d / "pred.irg1").string()});
  REQUIRE(r.code == 0);
  auto pred = read_raster(d / "pred.irg1");
  CHECK(pred.at(2, 0) == 1.0f);
  CHECK(pred.at(2, 3) == 0.0f);
}
