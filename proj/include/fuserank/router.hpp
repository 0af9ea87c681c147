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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fuserank/partition.hpp"

namespace fuserank {

/// Largest rewrite count the routing policy can emit. Parsing accepts any
/// non-negative count.
inline constexpr std::uint32_t kDefaultRewriteCap = 8;

/// The router's action:
///   A   {rag: false}
///   B.1 {rag: true, rewrite_count: n, classifier: false}
///   B.2 {rag: true, rewrite_count: n, classifier: true, partition: C}
struct DecisionPath {
  enum class Family { kNoRag, kGlobal, kClassified };

  bool rag = false;
  std::optional<std::uint32_t> rewrite_count;
  std::optional<bool> classifier;
  std::optional<Partition> partition;

  static DecisionPath no_rag() { return {}; }
  static DecisionPath global(std::uint32_t rewrites) { return {true, rewrites, false, std::nullopt}; }
  static DecisionPath classified(std::uint32_t rewrites, Partition p) {
    return {true, rewrites, true, p};
  }

  /// Throws Error(kMalformedPath) if the field presence rules are broken.
  void validate() const;
  bool valid() const noexcept;
  Family family() const;

  friend bool operator==(const DecisionPath&, const DecisionPath&) = default;
};

/// Accepts the canonical object form and the tool-call form
/// ({"tool_calls": [...]}, a bare array of calls, or one call object), and
/// a classifier tool-call object in place of the classifier boolean.
/// Distinct error codes: kMissingRag, kPartitionWithoutClassifier,
/// kUnknownPartition, kNegativeRewriteCount, kMalformedPath.
DecisionPath parse_path(std::string_view json_text);
std::string path_to_json(const DecisionPath& path);

enum class DecisionOutcome { kNotApplicable, kCorrect, kIncorrect };

struct RewardResult {
  int total = 0;
  std::array<DecisionOutcome, 4> decisions{};  // Decisions 1..4

  /// Total recomputed from the outcome flags alone.
  int implied_total() const noexcept;
};

/// Step-by-step comparison of an agent path against ground truth; total in
/// {0, ..., 4}. Throws Error(kMalformedPath) for grammar-invalid input.
RewardResult hierarchical_reward(const DecisionPath& path, const DecisionPath& truth);

/// Every grammar-valid path with rewrite_count <= cap and partitions from
/// the given set: 1 + (cap + 1) * (1 + |partitions|) paths.
std::vector<DecisionPath> enumerate_paths(std::span<const Partition> partitions,
                                          std::uint32_t rewrite_cap);

struct RewardRow {
  DecisionPath path;
  DecisionPath truth;
  RewardResult reward;
};

std::vector<RewardRow> enumerate_reward_table(std::span<const Partition> partitions,
                                              std::uint32_t rewrite_cap);

struct RoutedQuery {
  std::string query_id;
  std::string text;
  /// Discrete policy features; hashed from text when not given explicitly.
  std::vector<std::uint32_t> features;
  DecisionPath ground_truth;
};

/// One JSON object: {query_id, text, ground_truth, features?}.
RoutedQuery parse_routed_query(std::string_view json_text);
std::string routed_query_to_json(const RoutedQuery& query);
std::vector<RoutedQuery> load_routed_queries(const std::filesystem::path& path);

}  // namespace fuserank
