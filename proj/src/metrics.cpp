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

#include "fuserank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fuserank/error.hpp"
#include "io_util.hpp"

namespace fuserank {

using nlohmann::json;

namespace {

void require_queries(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kUndefinedMetric, "metric over an empty query set");
}

void require_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
}

double gain(int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; }

double discount(std::size_t position) { return std::log2(static_cast<double>(position) + 1.0); }

std::vector<std::string> ranking_ids(const RankedList& list) {
  std::vector<std::string> ids;
  ids.reserve(list.entries.size());
  for (const auto& e : list.entries) ids.push_back(e.page_id);
  return ids;
}

std::string mrr_mode_name(MrrMode m) {
  return m == MrrMode::kZeroOnMiss ? "zero_on_miss" : "printed_min_form";
}

}  // namespace

double recall_at_k(std::span<const Rank> ranks, std::size_t k) {
  require_k(k);
  require_queries(ranks.size());
  std::size_t hits = 0;
  for (const auto& r : ranks) hits += (r && *r <= k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr_at_k(std::span<const Rank> ranks, std::size_t k, MrrMode mode) {
  require_k(k);
  require_queries(ranks.size());
  double total = 0.0;
  for (const auto& r : ranks) {
    if (mode == MrrMode::kPrintedMinForm) {
      const std::size_t pos = r ? std::min(*r, k + 1) : k + 1;
      total += 1.0 / static_cast<double>(pos);
    } else if (r && *r <= k) {
      total += 1.0 / static_cast<double>(*r);
    }
  }
  return total / static_cast<double>(ranks.size());
}

int Qrel::relevance(const std::string& page_id) const {
  auto it = graded.find(page_id);
  return it == graded.end() ? 0 : it->second;
}

Qrel make_qrel(const std::string& query_id, const std::string& target_page_id,
               const NeighborGraph& graph) {
  if (!graph.contains(target_page_id)) {
    throw Error(ErrorCode::kInvalidQrel,
                "query " + query_id + ": target page " + target_page_id + " is not in the corpus");
  }
  Qrel q{query_id, target_page_id, {}};
  q.graded[target_page_id] = 2;
  for (const auto& nb : graph.neighbors(target_page_id)) q.graded[nb] = 1;
  return q;
}

Rank rank_of(std::span<const std::string> ranking, const std::string& page_id) {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i] == page_id) return i + 1;
  }
  return std::nullopt;
}

double ndcg_at_k(std::span<const std::string> ranking, const Qrel& qrel, std::size_t k) {
  require_k(k);
  if (qrel.relevance(qrel.target_page_id) != 2) {
    throw Error(ErrorCode::kInvalidQrel, "qrel for " + qrel.query_id + " lacks its target");
  }
  std::set<std::string_view> seen;
  for (const auto& id : ranking) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidArgument, "ranking repeats page " + id);
    }
  }

  double dcg = 0.0;
  for (std::size_t j = 1; j <= std::min(k, ranking.size()); ++j) {
    dcg += gain(qrel.relevance(ranking[j - 1])) / discount(j);
  }
  std::vector<int> ideal;
  for (const auto& [id, rel] : qrel.graded) {
    if (rel > 0) ideal.push_back(rel);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t j = 1; j <= std::min(k, ideal.size()); ++j) idcg += gain(ideal[j - 1]) / discount(j);
  return dcg / idcg;
}

EvalReport evaluate(const Run& run, const std::map<std::string, Qrel>& qrels,
                    std::span<const std::size_t> ks, MrrMode mrr_mode) {
  if (ks.empty()) throw Error(ErrorCode::kInvalidArgument, "no cutoffs requested");
  for (std::size_t k : ks) require_k(k);

  EvalReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.mrr_mode = mrr_mode;

  std::vector<Rank> ranks;
  std::vector<std::vector<std::string>> rankings;
  std::vector<const Qrel*> used;
  for (const auto& [qid, list] : run) {
    auto it = qrels.find(qid);
    if (it == qrels.end()) {
      report.skipped.push_back(qid);
      continue;
    }
    rankings.push_back(ranking_ids(list));
    ranks.push_back(rank_of(rankings.back(), it->second.target_page_id));
    used.push_back(&it->second);
    report.ranks[qid] = ranks.back();
  }
  report.query_count = ranks.size();
  require_queries(report.query_count);

  for (std::size_t k : ks) {
    report.recall.push_back(recall_at_k(ranks, k));
    report.mrr.push_back(mrr_at_k(ranks, k, mrr_mode));
    double ndcg = 0.0;
    for (std::size_t i = 0; i < rankings.size(); ++i) ndcg += ndcg_at_k(rankings[i], *used[i], k);
    report.ndcg.push_back(ndcg / static_cast<double>(rankings.size()));
  }
  return report;
}

std::vector<std::string> default_report_columns() {
  return {"Rec@1", "Rec@5", "MRR@1", "MRR@5", "MRR@20", "NDCG@1", "NDCG@5", "NDCG@20"};
}

std::string report_to_json(const EvalReport& report) {
  json metrics = json::object();
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    const std::string k = std::to_string(report.ks[i]);
    metrics["recall@" + k] = report.recall[i];
    metrics["mrr@" + k] = report.mrr[i];
    metrics["ndcg@" + k] = report.ndcg[i];
  }
  json ranks = json::object();
  for (const auto& [qid, r] : report.ranks) ranks[qid] = r ? json(*r) : json(nullptr);
  json doc = {{"ks", report.ks},
              {"query_count", report.query_count},
              {"mrr_mode", mrr_mode_name(report.mrr_mode)},
              {"metrics", std::move(metrics)},
              {"ranks", std::move(ranks)},
              {"skipped", report.skipped},
              {"warnings", report.skipped.size()}};
  return doc.dump(2);
}

std::string report_to_table(const EvalReport& report, const std::string& method_label,
                            const std::vector<std::string>& columns) {
  struct Column {
    std::string label;
    double value;
  };
  std::vector<Column> cols;
  for (const auto& label : columns) {
    const auto at = label.find('@');
    if (at == std::string::npos) continue;
    const std::string metric = label.substr(0, at);
    std::size_t k = 0;
    try {
      k = std::stoul(label.substr(at + 1));
    } catch (const std::exception&) {
      continue;
    }
    auto kit = std::find(report.ks.begin(), report.ks.end(), k);
    if (kit == report.ks.end()) continue;
    const auto i = static_cast<std::size_t>(kit - report.ks.begin());
    if (metric == "Rec") cols.push_back({label, report.recall[i]});
    else if (metric == "MRR") cols.push_back({label, report.mrr[i]});
    else if (metric == "NDCG") cols.push_back({label, report.ndcg[i]});
  }

  const std::size_t first = std::max<std::size_t>(method_label.size(), 6);
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(first)) << "Method";
  for (const auto& c : cols) out << "  " << std::right << std::setw(8) << c.label;
  out << "\n" << std::left << std::setw(static_cast<int>(first)) << method_label;
  out << std::fixed << std::setprecision(3);
  for (const auto& c : cols) out << "  " << std::right << std::setw(8) << c.value;
  out << "\n";
  if (!report.skipped.empty()) {
    out << "warning: " << report.skipped.size() << " run queries had no qrel and were skipped\n";
  }
  return out.str();
}

Run load_run_jsonl(const std::filesystem::path& path) {
  Run run;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::kFormat, where + ": not valid JSON");
    }
    if (!doc.is_object() || !doc.contains("query_id") || !doc.contains("page_ids") ||
        !doc["query_id"].is_string() || !doc["page_ids"].is_array()) {
      throw Error(ErrorCode::kFormat, where + ": expected {query_id, page_ids[, scores]}");
    }
    RankedList list;
    const auto& ids = doc["page_ids"];
    const bool scored = doc.contains("scores");
    if (scored && (!doc["scores"].is_array() || doc["scores"].size() != ids.size())) {
      throw Error(ErrorCode::kFormat, where + ": scores must parallel page_ids");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!ids[i].is_string()) throw Error(ErrorCode::kFormat, where + ": page ids must be strings");
      double score = 0.0;
      if (scored) {
        if (!doc["scores"][i].is_number()) throw Error(ErrorCode::kFormat, where + ": bad score");
        score = doc["scores"][i].get<double>();
      }
      list.entries.push_back({ids[i].get<std::string>(), score, std::nullopt});
    }
    if (scored) {
      std::stable_sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) {
        return ranks_before(a.score, a.page_id, b.score, b.page_id);
      });
    }
    const auto qid = doc["query_id"].get<std::string>();
    if (!run.emplace(qid, std::move(list)).second) {
      throw Error(ErrorCode::kFormat, where + ": duplicate query_id " + qid);
    }
  }
  return run;
}

std::string run_to_jsonl(const Run& run) {
  std::string out;
  for (const auto& [qid, list] : run) {
    json ids = json::array();
    json scores = json::array();
    // Scores are written only when they reproduce the list order on reload;
    // otherwise file order carries the ranking.
    bool consistent = true;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const auto& e = list.entries[i];
      ids.push_back(e.page_id);
      scores.push_back(e.score);
      if (i > 0) {
        const auto& p = list.entries[i - 1];
        consistent = consistent && ranks_before(p.score, p.page_id, e.score, e.page_id);
      }
    }
    json line = {{"query_id", qid}, {"page_ids", ids}};
    if (consistent) line["scores"] = scores;
    out += line.dump() + "\n";
  }
  return out;
}

std::map<std::string, Qrel> load_qrels_jsonl(const std::filesystem::path& path,
                                             const NeighborGraph& graph) {
  std::map<std::string, Qrel> qrels;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::kFormat, where + ": not valid JSON");
    }
    if (!doc.is_object() || !doc.value("query_id", json()).is_string() ||
        !doc.value("target_page_id", json()).is_string()) {
      throw Error(ErrorCode::kFormat, where + ": expected {query_id, target_page_id}");
    }
    const auto qid = doc["query_id"].get<std::string>();
    if (qrels.count(qid)) throw Error(ErrorCode::kInvalidQrel, where + ": duplicate query_id " + qid);
    qrels.emplace(qid, make_qrel(qid, doc["target_page_id"].get<std::string>(), graph));
  }
  return qrels;
}

}  // namespace fuserank
