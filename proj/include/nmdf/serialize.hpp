#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nmdf/eval.hpp"
#include "nmdf/factorization.hpp"
#include "nmdf/tensor_field.hpp"

namespace nmdf {

nlohmann::json descriptor_to_json(const Manifold& m);
Manifold descriptor_from_json(const nlohmann::json& j);

/// Payload-only encoding: a flat array for Euclidean-family points, an array
/// of packed upper triangles for SPD-family points.
nlohmann::json point_payload_to_json(const Point& p);
Point point_payload_from_json(const Manifold& m, const nlohmann::json& j);

nlohmann::json dataset_to_json(const BlockDataset& d);
BlockDataset dataset_from_json(const nlohmann::json& j);

/// Stores H, F, the base point and run metadata; xi and Y are recomputed on
/// load.
nlohmann::json factorization_to_json(const Factorization& f);
Factorization factorization_from_json(const nlohmann::json& j);

/// CSV with header rank,exact,tangent,cc,wall_time_s. The timing column is
/// zeroed unless `with_timing` so that repeated runs are byte-identical.
std::string error_csv(const std::vector<SweepEntry>& entries, bool with_timing = false);

nlohmann::json load_json_file(const std::string& path);
void save_text_file(const std::string& path, const std::string& contents);

}  // namespace nmdf
