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

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fuserank/scoring.hpp"
#include "fuserank/store.hpp"

namespace fuserank {

/// 1-based position of the target page; nullopt when it was not retrieved.
using Rank = std::optional<std::size_t>;

enum class MrrMode {
  kZeroOnMiss,      // reciprocal rank 0 when the target is outside the top k
  kPrintedMinForm,  // 1 / min(rank, k + 1); a miss contributes 1 / (k + 1)
};

double recall_at_k(std::span<const Rank> ranks, std::size_t k);
double mrr_at_k(std::span<const Rank> ranks, std::size_t k, MrrMode mode = MrrMode::kZeroOnMiss);

/// Graded relevance for one query: target 2, adjacent pages of the same
/// book 1, everything else 0.
struct Qrel {
  std::string query_id;
  std::string target_page_id;
  std::map<std::string, int> graded;

  int relevance(const std::string& page_id) const;
};

/// Throws Error(kInvalidQrel) if the target page is not in the graph.
Qrel make_qrel(const std::string& query_id, const std::string& target_page_id,
               const NeighborGraph& graph);

Rank rank_of(std::span<const std::string> ranking, const std::string& page_id);

/// DCG with gain 2^rel - 1 and discount log2(position + 1), normalized by
/// the DCG of the qrel's relevances sorted descending.
double ndcg_at_k(std::span<const std::string> ranking, const Qrel& qrel, std::size_t k);

/// Query id -> ranked list. Entries must already be in rank order.
using Run = std::map<std::string, RankedList>;

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> recall;  // parallel to ks
  std::vector<double> mrr;
  std::vector<double> ndcg;
  std::map<std::string, Rank> ranks;
  std::size_t query_count = 0;
  std::vector<std::string> skipped;  // run queries without a qrel
  MrrMode mrr_mode = MrrMode::kZeroOnMiss;
};

/// Throws Error(kUndefinedMetric) when no query can be evaluated.
EvalReport evaluate(const Run& run, const std::map<std::string, Qrel>& qrels,
                    std::span<const std::size_t> ks, MrrMode mrr_mode = MrrMode::kZeroOnMiss);

/// Column labels like "Rec@1", "MRR@20", "NDCG@5".
std::vector<std::string> default_report_columns();
std::string report_to_json(const EvalReport& report);
/// Aligned text table; columns not computed for the report's ks are dropped.
std::string report_to_table(const EvalReport& report, const std::string& method_label,
                            const std::vector<std::string>& columns = default_report_columns());

/// JSON-lines readers. Run lines: {"query_id", "page_ids", "scores"?};
/// scored lists are ordered by (score desc, page_id asc).
Run load_run_jsonl(const std::filesystem::path& path);
std::string run_to_jsonl(const Run& run);
/// Qrels lines: {"query_id", "target_page_id"}; neighbors come from graph.
std::map<std::string, Qrel> load_qrels_jsonl(const std::filesystem::path& path,
                                             const NeighborGraph& graph);

}  // namespace fuserank
