#pragma once

#include "irrigrid/evaluation.hpp"
#include "irrigrid/pipeline.hpp"

#include <string>
#include <string_view>

namespace irrigrid {

// JSON renderings of run reports. Undefined fractions (zero comparisons or
// zero scored points) are written as null.

/// One provenance record (single line, no trailing newline).
std::string tile_report_json(const TileReport& report);
/// Provenance as JSON lines in tile order.
std::string provenance_jsonl(const PredictionRaster& prediction);
std::string consistency_report_json(const ConsistencyReport& report);
std::string accuracy_report_json(const AccuracyReport& report);
/// Per-k selection table as CSV: k,inertia,silhouette,calinski_harabasz,davies_bouldin.
std::string selection_csv(const ModelSelection& selection);

/// Parses a scene description (see docs/formats.md). Throws InvalidArgument
/// on schema violations.
SynthScene parse_scene_json(std::string_view text);

} // namespace irrigrid
