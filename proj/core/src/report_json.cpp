#include "irrigrid/report.hpp"

#include "irrigrid/error.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace irrigrid {

namespace {

using nlohmann::json;

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

json optional_fraction(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json box_json(const GeoBox& b) { return json::array({b.lon_min, b.lat_min, b.lon_max, b.lat_max}); }

json series_json(const std::array<double, 12>& s) { return json(std::vector<double>(s.begin(), s.end())); }

json candidate_json(const KCandidate& c) {
  json j{{"k", c.k}, {"inertia", c.inertia}};
  if (c.quality) {
    j["silhouette"] = c.quality->silhouette;
    j["calinski_harabasz"] = number_or_inf(c.quality->calinski_harabasz);
    j["davies_bouldin"] = c.quality->davies_bouldin;
  } else {
    j["silhouette"] = nullptr;
    j["calinski_harabasz"] = nullptr;
    j["davies_bouldin"] = nullptr;
    j["error"] = c.error;
  }
  return j;
}

json cluster_json(std::size_t index, const ClusterReport& c) {
  json j{{"cluster", index},
         {"pixels", c.pixels},
         {"climate_pixels", c.climate_pixels},
         {"centroid", series_json(c.centroid)}};
  if (!c.label) {
    j["overall"] = nullptr;
    j["seasons"] = json::array();
    return j;
  }
  j["precip_mm"] = series_json(c.precip_mm);
  j["temp_c"] = series_json(c.temp_c);
  j["overall"] = std::string(to_string(c.label->overall));
  json seasons = json::array();
  for (const auto& s : c.label->seasons) {
    seasons.push_back({{"peak_month", s.season.peak_month},
                       {"peak_ndvi", s.season.peak_ndvi},
                       {"mean_precip_mm", s.season.mean_precip_mm},
                       {"mean_temp_c", s.season.mean_temp_c},
                       {"verdict", std::string(to_string(s.verdict.verdict))},
                       {"not_cultivated", s.verdict.not_cultivated}});
  }
  j["seasons"] = std::move(seasons);
  return j;
}

json agreement_json(const Agreement& a) {
  return json{{"comparisons", a.comparisons}, {"agreements", a.agreements}, {"fraction", optional_fraction(a.fraction())}};
}

// Strict object reader: every key must be consumed.
class ObjectReader {
public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InvalidArgument(where_ + " must be a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument(where_ + "." + key + " has the wrong type");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw InvalidArgument(where_ + ": unknown key '" + item.key() + "'");
    }
  }

private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

GeoBox parse_box(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw InvalidArgument(where + " must be [lon_min, lat_min, lon_max, lat_max]");
  try {
    GeoBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    b.validate();
    return b;
  } catch (const json::exception&) {
    throw InvalidArgument(where + " must contain numbers");
  }
}

std::array<double, 12> parse_series(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 12) throw InvalidArgument(where + " must be an array of 12 numbers");
  std::array<double, 12> out{};
  try {
    for (std::size_t m = 0; m < 12; ++m) out[m] = j[m].get<double>();
  } catch (const json::exception&) {
    throw InvalidArgument(where + " must contain numbers");
  }
  return out;
}

MaskClass parse_land(const std::string& s, const std::string& where) {
  if (s == "cropland") return MaskClass::Cropland;
  if (s == "non_cropland") return MaskClass::NonCropland;
  if (s == "water") return MaskClass::Water;
  throw InvalidArgument(where + " must be one of cropland, non_cropland, water");
}

} // namespace

std::string tile_report_json(const TileReport& r) {
  json j{{"tile_row", r.tile.row},
         {"tile_col", r.tile.col},
         {"geobox", box_json(r.tile.box)},
         {"width", r.width},
         {"height", r.height},
         {"seed", r.seed},
         {"mode", std::string(to_string(r.mode))},
         {"cropland_pixels", r.cropland_pixels}};
  j["k"] = r.k ? json(*r.k) : json(nullptr);
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back(candidate_json(c));
  j["quality"] = std::move(cands);
  j["silhouette_sample_size"] = r.silhouette_sample_size;
  json clusters = json::array();
  for (std::size_t i = 0; i < r.clusters.size(); ++i) clusters.push_back(cluster_json(i, r.clusters[i]));
  j["clusters"] = std::move(clusters);
  j["label_counts"] = {{"rainfed", r.label_counts[0]},
                       {"irrigated", r.label_counts[1]},
                       {"not_cultivated", r.label_counts[2]},
                       {"non_cropland", r.label_counts[3]},
                       {"nodata", r.label_counts[4]}};
  j["warnings"] = r.warnings;
  if (r.mode == TileMode::Failed) j["error"] = r.error;
  return j.dump();
}

std::string provenance_jsonl(const PredictionRaster& prediction) {
  std::string out;
  for (const auto& t : prediction.provenance) {
    out += tile_report_json(t);
    out += '\n';
  }
  return out;
}

std::string consistency_report_json(const ConsistencyReport& r) {
  json shifts = json::array();
  for (const auto& s : r.shifts) {
    json j = agreement_json(s.agreement);
    j["dx"] = s.dx;
    j["dy"] = s.dy;
    j["dx_pixels"] = s.dx_pixels;
    j["dy_pixels"] = s.dy_pixels;
    j["dx_degrees"] = s.dx_degrees;
    j["dy_degrees"] = s.dy_degrees;
    j["failed_tiles"] = s.failed_tiles;
    shifts.push_back(std::move(j));
  }
  json j{{"shifts", std::move(shifts)},
         {"comparisons", r.overall.comparisons},
         {"agreements", r.overall.agreements},
         {"overall", optional_fraction(r.overall.fraction())},
         {"base_failed_tiles", r.base_failed_tiles}};
  return j.dump(2) + "\n";
}

std::string accuracy_report_json(const AccuracyReport& r) {
  json points = json::array();
  for (const auto& o : r.outcomes) {
    json p{{"lon", o.point.lon}, {"lat", o.point.lat}, {"truth", std::string(to_string(o.point.truth))}};
    if (o.predicted) {
      p["predicted"] = std::string(to_string(*o.predicted));
      p["match"] = *o.predicted == o.point.truth;
    } else {
      p["predicted"] = nullptr;
      p["unscorable"] = o.reason;
    }
    points.push_back(std::move(p));
  }
  json j{{"n", r.scored},
         {"matches", r.matches},
         {"unscorable", r.unscorable},
         {"accuracy", optional_fraction(r.accuracy())},
         {"confusion",
          {{"truth_rainfed", {{"predicted_rainfed", r.confusion[0][0]}, {"predicted_irrigated", r.confusion[0][1]}}},
           {"truth_irrigated",
            {{"predicted_rainfed", r.confusion[1][0]}, {"predicted_irrigated", r.confusion[1][1]}}}}},
         {"points", std::move(points)}};
  return j.dump(2) + "\n";
}

std::string selection_csv(const ModelSelection& selection) {
  std::ostringstream os;
  os.precision(17);
  os << "k,inertia,silhouette,calinski_harabasz,davies_bouldin\n";
  for (const auto& c : selection.candidates) {
    os << c.k << ',' << c.inertia << ',';
    if (c.quality) {
      os << c.quality->silhouette << ',';
      if (std::isinf(c.quality->calinski_harabasz)) {
        os << "inf";
      } else {
        os << c.quality->calinski_harabasz;
      }
      os << ',' << c.quality->davies_bouldin << '\n';
    } else {
      os << ",,\n";
    }
  }
  return os.str();
}

SynthScene parse_scene_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("scene JSON: ") + e.what());
  }
  ObjectReader root(doc, "scene");
  SynthScene scene;
  const json* extent = root.find("extent");
  if (!extent) throw InvalidArgument("scene.extent is required");
  scene.extent = parse_box(*extent, "scene.extent");
  scene.pixel_size = root.get<double>("pixel_size", scene.pixel_size);
  scene.noise_sigma = root.get<double>("noise_sigma", scene.noise_sigma);
  scene.seed = root.get<std::uint64_t>("seed", scene.seed);
  scene.background = parse_land(root.get<std::string>("background", "non_cropland"), "scene.background");
  scene.background_ndvi = root.get<double>("background_ndvi", scene.background_ndvi);
  if (const json* climate = root.find("climate")) {
    ObjectReader c(*climate, "scene.climate");
    scene.baseline_precip_mm = c.get<double>("baseline_precip_mm", scene.baseline_precip_mm);
    scene.dry_precip_mm = c.get<double>("dry_precip_mm", scene.dry_precip_mm);
    scene.wet_precip_mm = c.get<double>("wet_precip_mm", scene.wet_precip_mm);
    scene.temp_c = c.get<double>("temp_c", scene.temp_c);
    c.finish();
  }
  const json* regions = root.find("regions");
  if (regions) {
    if (!regions->is_array()) throw InvalidArgument("scene.regions must be an array");
    for (std::size_t i = 0; i < regions->size(); ++i) {
      const std::string where = "scene.regions[" + std::to_string(i) + "]";
      ObjectReader r((*regions)[i], where);
      SynthRegion region;
      const json* box = r.find("box");
      if (!box) throw InvalidArgument(where + ".box is required");
      region.box = parse_box(*box, where + ".box");
      region.land = parse_land(r.get<std::string>("land", "cropland"), where + ".land");
      region.irrigated = r.get<bool>("irrigated", region.irrigated);
      region.peak_month = r.get<int>("peak_month", region.peak_month);
      region.peak_ndvi = r.get<double>("peak_ndvi", region.peak_ndvi);
      region.base_ndvi = r.get<double>("base_ndvi", region.base_ndvi);
      region.width_months = r.get<double>("width_months", region.width_months);
      if (const json* p = r.find("precip_mm")) region.precip_mm = parse_series(*p, where + ".precip_mm");
      if (const json* t = r.find("temp_c")) region.temp_c = parse_series(*t, where + ".temp_c");
      r.finish();
      scene.regions.push_back(region);
    }
  }
  root.finish();
  return scene;
}

} // namespace irrigrid
