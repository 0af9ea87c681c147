// Copyright 2026 The fuserank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON helpers shared by the library sources and the C API shim.

#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "fuserank/embedding.hpp"
#include "fuserank/error.hpp"
#include "fuserank/router.hpp"
#include "fuserank/scoring.hpp"

namespace fuserank {

DecisionPath parse_path_value(const nlohmann::json& doc);
nlohmann::json path_to_value(const DecisionPath& path);

namespace json_util {

inline nlohmann::json parse(std::string_view text, ErrorCode code, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, what + " is not valid JSON: " + e.what());
  }
}

template <typename T>
T require(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kFormat, where + ": missing \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kFormat, where + ": \"" + key + "\" has the wrong type");
  }
}

/// A multi-vector as an array of rows: [[...], [...]].
inline MultiVector multivector_from(const nlohmann::json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) {
    throw Error(ErrorCode::kFormat, where + " must be a non-empty array of rows");
  }
  std::vector<std::vector<float>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.is_array()) throw Error(ErrorCode::kFormat, where + ": each row must be an array");
    std::vector<float> row;
    row.reserve(r.size());
    for (const auto& v : r) {
      if (!v.is_number()) throw Error(ErrorCode::kFormat, where + ": non-numeric entry");
      row.push_back(v.get<float>());
    }
    out.push_back(std::move(row));
  }
  try {
    return MultiVector::from_rows(out);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, where + ": " + e.what());
  }
}

inline nlohmann::json multivector_to(const MultiVector& mv) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    const auto r = mv.row(i);
    rows.push_back(std::vector<float>(r.begin(), r.end()));
  }
  return rows;
}

/// {"query_id"?, "text"?: rows, "image"?: rows}
inline QueryBundle query_bundle_from(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kFormat, "query must be a JSON object");
  QueryBundle q;
  if (doc.contains("text") && !doc["text"].is_null()) q.text = multivector_from(doc["text"], "query text");
  if (doc.contains("image") && !doc["image"].is_null()) {
    q.image = multivector_from(doc["image"], "query image");
  }
  q.validate();
  return q;
}

inline nlohmann::json breakdown_to(const FusionBreakdown& b) {
  return {{"term1_std_of_std", b.term1_std_of_std},
          {"term1_text_kurtosis_mean", b.term1_text_kurtosis_mean},
          {"term1_image_kurtosis_mean", b.term1_image_kurtosis_mean},
          {"term2_mean_max", b.term2_mean_max},
          {"total", b.total}};
}

inline nlohmann::json entry_to(const RankedEntry& e) {
  nlohmann::json j = {{"page_id", e.page_id}, {"score", e.score}};
  if (e.breakdown) j["breakdown"] = breakdown_to(*e.breakdown);
  return j;
}

}  // namespace json_util
}  // namespace fuserank
