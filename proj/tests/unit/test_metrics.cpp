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

#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "expect_error.hpp"
#include "fuserank/metrics.hpp"
#include "synthetic.hpp"

namespace fuserank {
namespace {

const std::vector<PageMeta> kPages = {{"t", "b", 1, Partition::kBreast, 1},
                                      {"n", "b", 2, Partition::kBreast, 1},
                                      {"x", "c", 1, Partition::kBreast, 1},
                                      {"y", "d", 1, Partition::kBreast, 1},
                                      {"z", "d", 2, Partition::kBreast, 1}};

TEST(Recall, FractionOfTargetsWithinK) {
  const std::vector<Rank> ranks = {1, 3, std::nullopt, 7};
  EXPECT_DOUBLE_EQ(recall_at_k(ranks, 1), 0.25);
  EXPECT_DOUBLE_EQ(recall_at_k(ranks, 5), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(ranks, 7), 0.75);
}

TEST(Mrr, HandComputedFixture) {
  const std::vector<Rank> ranks = {1, 3, 7};
  EXPECT_NEAR(mrr_at_k(ranks, 5), 4.0 / 9.0, 1e-16);
  // Printed min form: the miss contributes 1 / (k + 1).
  EXPECT_NEAR(mrr_at_k(ranks, 5, MrrMode::kPrintedMinForm), (1.0 + 1.0 / 3 + 1.0 / 6) / 3, 1e-15);
}

TEST(Mrr, MonotoneInK) {
  testing::Gauss g(4);
  std::vector<Rank> ranks;
  for (int i = 0; i < 100; ++i) {
    if (g.uniform() < 0.2) ranks.emplace_back(std::nullopt);
    else ranks.emplace_back(1 + g.index(30));
  }
  for (std::size_t k = 1; k < 30; ++k) {
    EXPECT_LE(mrr_at_k(ranks, k), mrr_at_k(ranks, k + 1));
    EXPECT_LE(recall_at_k(ranks, k), recall_at_k(ranks, k + 1));
    EXPECT_LE(mrr_at_k(ranks, k), recall_at_k(ranks, k));
  }
}

TEST(Metrics, EmptyQuerySetIsUndefined) {
  EXPECT_FR_ERROR(recall_at_k({}, 5), ErrorCode::kUndefinedMetric);
  EXPECT_FR_ERROR(mrr_at_k({}, 5), ErrorCode::kUndefinedMetric);
  const std::vector<Rank> one = {1};
  EXPECT_FR_ERROR(recall_at_k(one, 0), ErrorCode::kInvalidArgument);
}

TEST(Ndcg, HandComputedFixture) {
  const NeighborGraph graph(kPages);
  const auto q = make_qrel("q", "t", graph);
  EXPECT_EQ(q.relevance("t"), 2);
  EXPECT_EQ(q.relevance("n"), 1);
  EXPECT_EQ(q.relevance("x"), 0);
  const std::vector<std::string> ranking = {"x", "t", "y"};
  // DCG 3 / log2(3), IDCG 3 + 1 / log2(3).
  EXPECT_NEAR(ndcg_at_k(ranking, q, 3), 0.52129602861431999145, 1e-15);
  const std::vector<std::string> ideal = {"t", "n"};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ideal, q, 2), 1.0);
  const std::vector<std::string> miss = {"x", "y"};
  EXPECT_DOUBLE_EQ(ndcg_at_k(miss, q, 2), 0.0);
}

TEST(Ndcg, RejectsBadInput) {
  const NeighborGraph graph(kPages);
  EXPECT_FR_ERROR(make_qrel("q", "unknown", graph), ErrorCode::kInvalidQrel);
  const auto q = make_qrel("q", "t", graph);
  const std::vector<std::string> repeated = {"t", "t"};
  EXPECT_FR_ERROR(ndcg_at_k(repeated, q, 2), ErrorCode::kInvalidArgument);
  Qrel broken{"q", "t", {{"n", 1}}};
  const std::vector<std::string> r = {"t"};
  EXPECT_FR_ERROR(ndcg_at_k(r, broken, 1), ErrorCode::kInvalidQrel);
}

TEST(Evaluate, SkipsQueriesWithoutQrels) {
  const NeighborGraph graph(kPages);
  fuserank::Run run;
  run["q1"].entries = {{"t", 0, {}}, {"x", 0, {}}};
  run["q2"].entries = {{"x", 0, {}}, {"y", 0, {}}, {"z", 0, {}}};
  run["orphan"].entries = {{"x", 0, {}}};
  std::map<std::string, Qrel> qrels;
  qrels.emplace("q1", make_qrel("q1", "t", graph));
  qrels.emplace("q2", make_qrel("q2", "z", graph));
  const std::vector<std::size_t> ks = {1, 5};
  const auto r = evaluate(run, qrels, ks);
  EXPECT_EQ(r.query_count, 2u);
  EXPECT_EQ(r.skipped, (std::vector<std::string>{"orphan"}));
  EXPECT_DOUBLE_EQ(r.recall[0], 0.5);
  EXPECT_DOUBLE_EQ(r.recall[1], 1.0);
  EXPECT_DOUBLE_EQ(r.mrr[1], (1.0 + 1.0 / 3) / 2);
  EXPECT_EQ(r.ranks.at("q2"), Rank(3));
  const auto doc = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(doc["warnings"], 1);
  EXPECT_DOUBLE_EQ(doc["metrics"]["recall@5"].get<double>(), 1.0);

  std::map<std::string, Qrel> none;
  EXPECT_FR_ERROR(evaluate(run, none, ks), ErrorCode::kUndefinedMetric);
  EXPECT_FR_ERROR(evaluate(run, qrels, {}), ErrorCode::kInvalidArgument);
}

TEST(Report, TableKeepsOnlyComputedColumns) {
  const NeighborGraph graph(kPages);
  fuserank::Run run;
  run["q"].entries = {{"t", 0, {}}};
  std::map<std::string, Qrel> qrels;
  qrels.emplace("q", make_qrel("q", "t", graph));
  const std::vector<std::size_t> ks = {1, 5, 20};
  const auto table = report_to_table(evaluate(run, qrels, ks), "fusion");
  std::istringstream lines(table);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  for (const char* col : {"Rec@1", "Rec@5", "MRR@1", "MRR@5", "MRR@20", "NDCG@1", "NDCG@5", "NDCG@20"}) {
    EXPECT_NE(header.find(col), std::string::npos) << col;
  }
  EXPECT_EQ(row.rfind("fusion", 0), 0u);
  EXPECT_NE(row.find("1.000"), std::string::npos);

  const std::vector<std::size_t> only1 = {1};
  const auto narrow = report_to_table(evaluate(run, qrels, only1), "m");
  EXPECT_EQ(narrow.find("Rec@5"), std::string::npos);
  EXPECT_NE(narrow.find("NDCG@1"), std::string::npos);
}

TEST(RunFile, ScoredListsAreResortedAndRoundTrip) {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "run.jsonl");
    out << R"({"query_id":"q1","page_ids":["a","b","c"],"scores":[0.1,0.9,0.9]})" << "\n";
    out << "\n";
    out << R"({"query_id":"q2","page_ids":["z","y"]})" << "\n";
  }
  const auto run = load_run_jsonl(dir / "run.jsonl");
  ASSERT_EQ(run.size(), 2u);
  const auto& q1 = run.at("q1").entries;
  EXPECT_EQ(q1[0].page_id, "b");
  EXPECT_EQ(q1[1].page_id, "c");
  EXPECT_EQ(q1[2].page_id, "a");
  EXPECT_EQ(run.at("q2").entries[0].page_id, "z");  // unscored keeps file order
  {
    std::ofstream out(dir / "again.jsonl");
    out << run_to_jsonl(run);
  }
  const auto again = load_run_jsonl(dir / "again.jsonl");
  EXPECT_EQ(again.at("q1").entries[0].page_id, "b");
  EXPECT_EQ(again.at("q2").entries[1].page_id, "y");
}

TEST(RunFile, MalformedLines) {
  testing::TempDir dir;
  auto expect_bad = [&](const std::string& text) {
    std::ofstream(dir / "r.jsonl", std::ios::trunc) << text;
    EXPECT_FR_ERROR(load_run_jsonl(dir / "r.jsonl"), ErrorCode::kFormat);
  };
  expect_bad("{oops\n");
  expect_bad(R"({"query_id":"q"})" "\n");
  expect_bad(R"({"query_id":"q","page_ids":["a"],"scores":[1,2]})" "\n");
  expect_bad(R"({"query_id":"q","page_ids":[1]})" "\n");
  expect_bad(R"({"query_id":"q","page_ids":["a"]})" "\n" R"({"query_id":"q","page_ids":["b"]})" "\n");
  EXPECT_FR_ERROR(load_run_jsonl(dir / "missing.jsonl"), ErrorCode::kIo);
}

TEST(QrelsFile, LoadsAndValidates) {
  testing::TempDir dir;
  const NeighborGraph graph(kPages);
  std::ofstream(dir / "q.jsonl") << R"({"query_id":"q1","target_page_id":"t"})" "\n";
  const auto q = load_qrels_jsonl(dir / "q.jsonl", graph);
  EXPECT_EQ(q.at("q1").relevance("n"), 1);
  std::ofstream(dir / "d.jsonl") << R"({"query_id":"q1","target_page_id":"t"})" "\n"
                                 << R"({"query_id":"q1","target_page_id":"n"})" "\n";
  EXPECT_FR_ERROR(load_qrels_jsonl(dir / "d.jsonl", graph), ErrorCode::kInvalidQrel);
  std::ofstream(dir / "u.jsonl") << R"({"query_id":"q1","target_page_id":"nope"})" "\n";
  EXPECT_FR_ERROR(load_qrels_jsonl(dir / "u.jsonl", graph), ErrorCode::kInvalidQrel);
  std::ofstream(dir / "f.jsonl") << R"({"query_id":"q1"})" "\n";
  EXPECT_FR_ERROR(load_qrels_jsonl(dir / "f.jsonl", graph), ErrorCode::kFormat);
}

}  // namespace
}  // namespace fuserank
