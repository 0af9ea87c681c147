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

#include "fuserank/router.hpp"

#include <limits>
#include <set>

#include <json.hpp>

#include "fuserank/error.hpp"
#include "io_util.hpp"
#include "json_util.hpp"

namespace fuserank {

using nlohmann::json;

void DecisionPath::validate() const {
  if (!rag) {
    if (rewrite_count || classifier || partition) {
      throw Error(ErrorCode::kMalformedPath, "a path without rag carries no further decisions");
    }
    return;
  }
  if (!rewrite_count || !classifier) {
    throw Error(ErrorCode::kMalformedPath, "a rag path needs rewrite_count and classifier");
  }
  if (*classifier && !partition) {
    throw Error(ErrorCode::kMalformedPath, "classifier path needs a partition");
  }
  if (!*classifier && partition) {
    throw Error(ErrorCode::kPartitionWithoutClassifier, "partition given without classifier");
  }
}

bool DecisionPath::valid() const noexcept {
  try {
    validate();
    return true;
  } catch (const Error&) {
    return false;
  }
}

DecisionPath::Family DecisionPath::family() const {
  validate();
  if (!rag) return Family::kNoRag;
  return *classifier ? Family::kClassified : Family::kGlobal;
}

namespace {

Partition partition_from(const json& v) {
  if (!v.is_string()) throw Error(ErrorCode::kMalformedPath, "partition must be a string");
  return require_partition(v.get<std::string>());
}

// {"name": "classifier", "parameters": {"partition": "..."}}
std::optional<Partition> classifier_call_partition(const json& call) {
  const auto params = call.find("parameters");
  if (params == call.end() || !params->is_object() || !params->contains("partition")) {
    throw Error(ErrorCode::kMalformedPath, "classifier call must carry parameters.partition");
  }
  return partition_from((*params)["partition"]);
}

DecisionPath parse_tool_calls(const json& calls) {
  std::set<std::string> rag_calls;
  std::optional<Partition> partition;
  bool saw_classifier = false;
  for (const auto& call : calls) {
    if (!call.is_object() || !call.contains("name") || !call["name"].is_string()) {
      throw Error(ErrorCode::kMalformedPath, "tool call needs a string \"name\"");
    }
    const auto name = call["name"].get<std::string>();
    if (name == "rag") {
      rag_calls.insert(call.value("parameters", json::object()).dump());
    } else if (name == "classifier") {
      const auto p = classifier_call_partition(call);
      if (saw_classifier && partition != p) {
        throw Error(ErrorCode::kMalformedPath, "conflicting classifier partitions");
      }
      saw_classifier = true;
      partition = p;
    } else {
      throw Error(ErrorCode::kMalformedPath, "unknown tool \"" + name + "\"");
    }
  }
  if (rag_calls.empty()) {
    if (saw_classifier) {
      throw Error(ErrorCode::kMissingRag, "classifier call without a rag call");
    }
    return DecisionPath::no_rag();
  }
  const auto rewrites = static_cast<std::uint32_t>(rag_calls.size() - 1);
  return saw_classifier ? DecisionPath::classified(rewrites, *partition)
                        : DecisionPath::global(rewrites);
}

DecisionPath parse_canonical(const json& doc) {
  const auto rag_it = doc.find("rag");
  if (rag_it == doc.end()) throw Error(ErrorCode::kMissingRag, "path is missing \"rag\"");
  if (!rag_it->is_boolean()) throw Error(ErrorCode::kMalformedPath, "\"rag\" must be a boolean");

  DecisionPath p;
  p.rag = rag_it->get<bool>();
  if (!p.rag) {
    for (const char* key : {"rewrite_count", "classifier", "partition"}) {
      if (doc.contains(key)) {
        throw Error(ErrorCode::kMalformedPath,
                    std::string("\"") + key + "\" is not allowed when rag is false");
      }
    }
    return p;
  }

  p.rewrite_count = 0;
  if (auto it = doc.find("rewrite_count"); it != doc.end()) {
    if (!it->is_number_integer()) {
      throw Error(ErrorCode::kMalformedPath, "\"rewrite_count\" must be an integer");
    }
    const auto n = it->get<std::int64_t>();
    if (n < 0) throw Error(ErrorCode::kNegativeRewriteCount, "rewrite_count must be >= 0");
    if (n > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::kMalformedPath, "rewrite_count out of range");
    }
    p.rewrite_count = static_cast<std::uint32_t>(n);
  }

  p.classifier = false;
  std::optional<Partition> call_partition;
  if (auto it = doc.find("classifier"); it != doc.end()) {
    if (it->is_boolean()) {
      p.classifier = it->get<bool>();
    } else if (it->is_object()) {
      call_partition = classifier_call_partition(*it);
      p.classifier = true;
    } else {
      throw Error(ErrorCode::kMalformedPath, "\"classifier\" must be a boolean or a tool call");
    }
  }

  if (auto it = doc.find("partition"); it != doc.end()) {
    if (!*p.classifier) {
      throw Error(ErrorCode::kPartitionWithoutClassifier,
                  "\"partition\" is only allowed when classifier is true");
    }
    p.partition = partition_from(*it);
    if (call_partition && call_partition != p.partition) {
      throw Error(ErrorCode::kMalformedPath, "classifier call and partition field disagree");
    }
  } else if (call_partition) {
    p.partition = call_partition;
  }
  if (*p.classifier && !p.partition) {
    throw Error(ErrorCode::kMalformedPath, "classifier is true but no partition was chosen");
  }
  return p;
}

}  // namespace

DecisionPath parse_path_value(const json& doc) {
  if (doc.is_array()) return parse_tool_calls(doc);
  if (!doc.is_object()) throw Error(ErrorCode::kMalformedPath, "path must be a JSON object");
  if (auto it = doc.find("tool_calls"); it != doc.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kMalformedPath, "\"tool_calls\" must be an array");
    return parse_tool_calls(*it);
  }
  if (doc.contains("name") && !doc.contains("rag")) return parse_tool_calls(json::array({doc}));
  return parse_canonical(doc);
}

DecisionPath parse_path(std::string_view json_text) {
  return parse_path_value(json_util::parse(json_text, ErrorCode::kMalformedPath, "path"));
}

json path_to_value(const DecisionPath& path) {
  path.validate();
  json doc = {{"rag", path.rag}};
  if (path.rag) {
    doc["rewrite_count"] = *path.rewrite_count;
    doc["classifier"] = *path.classifier;
    if (path.partition) doc["partition"] = std::string(partition_name(*path.partition));
  }
  return doc;
}

std::string path_to_json(const DecisionPath& path) { return path_to_value(path).dump(); }

int RewardResult::implied_total() const noexcept {
  const auto [d1, d2, d3, d4] = decisions;
  if (d1 != DecisionOutcome::kCorrect) return 0;
  if (d2 == DecisionOutcome::kNotApplicable) return 4;
  int total = 1 + (d2 == DecisionOutcome::kCorrect ? 1 : 0);
  if (d3 == DecisionOutcome::kCorrect) {
    total += d4 == DecisionOutcome::kNotApplicable ? 2 : 1 + (d4 == DecisionOutcome::kCorrect ? 1 : 0);
  }
  return total;
}

RewardResult hierarchical_reward(const DecisionPath& path, const DecisionPath& truth) {
  path.validate();
  truth.validate();
  auto outcome = [](bool ok) { return ok ? DecisionOutcome::kCorrect : DecisionOutcome::kIncorrect; };

  RewardResult r;
  r.total = 0;
  if (path.rag != truth.rag) {
    r.decisions[0] = DecisionOutcome::kIncorrect;
    return r;
  }
  r.decisions[0] = DecisionOutcome::kCorrect;
  if (!truth.rag) {
    r.total = 4;
    return r;
  }
  r.total = 1;
  const bool rewrite_ok = path.rewrite_count == truth.rewrite_count;
  r.decisions[1] = outcome(rewrite_ok);
  if (rewrite_ok) r.total += 1;
  const bool classifier_ok = path.classifier == truth.classifier;
  r.decisions[2] = outcome(classifier_ok);
  if (classifier_ok) {
    if (!*path.classifier) {
      r.total += 2;
    } else {
      r.total += 1;
      const bool partition_ok = path.partition == truth.partition;
      r.decisions[3] = outcome(partition_ok);
      if (partition_ok) r.total += 1;
    }
  }
  return r;
}

std::vector<DecisionPath> enumerate_paths(std::span<const Partition> partitions,
                                          std::uint32_t rewrite_cap) {
  std::vector<DecisionPath> out{DecisionPath::no_rag()};
  for (std::uint32_t n = 0; n <= rewrite_cap; ++n) {
    out.push_back(DecisionPath::global(n));
    for (Partition p : partitions) out.push_back(DecisionPath::classified(n, p));
  }
  return out;
}

std::vector<RewardRow> enumerate_reward_table(std::span<const Partition> partitions,
                                              std::uint32_t rewrite_cap) {
  const auto paths = enumerate_paths(partitions, rewrite_cap);
  std::vector<RewardRow> rows;
  rows.reserve(paths.size() * paths.size());
  for (const auto& p : paths) {
    for (const auto& gt : paths) rows.push_back({p, gt, hierarchical_reward(p, gt)});
  }
  return rows;
}

RoutedQuery parse_routed_query(std::string_view json_text) {
  const json doc = json_util::parse(json_text, ErrorCode::kFormat, "routed query");
  if (!doc.is_object()) throw Error(ErrorCode::kFormat, "routed query must be an object");
  RoutedQuery q;
  q.query_id = json_util::require<std::string>(doc, "query_id", "routed query");
  q.text = doc.value("text", std::string());
  if (auto it = doc.find("features"); it != doc.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kFormat, "features must be an array");
    for (const auto& f : *it) {
      if (!f.is_number_unsigned()) throw Error(ErrorCode::kFormat, "features must be unsigned ints");
      q.features.push_back(f.get<std::uint32_t>());
    }
  }
  const auto gt = doc.find("ground_truth");
  if (gt == doc.end()) throw Error(ErrorCode::kFormat, "routed query needs ground_truth");
  q.ground_truth = parse_path_value(*gt);
  return q;
}

std::string routed_query_to_json(const RoutedQuery& query) {
  json doc = {{"query_id", query.query_id},
              {"text", query.text},
              {"ground_truth", path_to_value(query.ground_truth)}};
  if (!query.features.empty()) doc["features"] = query.features;
  return doc.dump();
}

std::vector<RoutedQuery> load_routed_queries(const std::filesystem::path& path) {
  std::vector<RoutedQuery> out;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    try {
      out.push_back(parse_routed_query(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fuserank
