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

#include <fstream>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "fuserank/hnsw.hpp"
#include "synthetic.hpp"

namespace fuserank {
namespace {

TEST(Hnsw, SinglePageIndexAlwaysReturnsIt) {
  const auto c = testing::random_corpus(1, 8, 3, 1);
  const auto idx = HnswIndex::build(c);
  testing::Gauss g(2);
  for (int i = 0; i < 10; ++i) {
    const auto r = idx.search(testing::gaussian_row(g, 8), 5);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].page_id, "p00000");
  }
}

TEST(Hnsw, StoredVectorFindsItself) {
  const auto c = testing::random_corpus(2000, 16, 1, 5);
  const auto idx = HnswIndex::build(c);
  for (std::size_t i = 0; i < c.size(); i += 97) {
    const auto r = idx.search(c.page(i).pooled, 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].page_id, c.page(i).meta.page_id);
  }
}

TEST(Hnsw, ResultsAreSortedUniqueAndInsidePartition) {
  const auto c = testing::random_corpus(3000, 16, 2, 6, 4);
  const auto idx = HnswIndex::build(c);
  testing::Gauss g(7);
  for (int q = 0; q < 30; ++q) {
    const auto v = testing::gaussian_row(g, 16);
    const std::optional<Partition> part =
        q % 2 ? std::optional<Partition>(static_cast<Partition>(q % 4)) : std::nullopt;
    const auto r = idx.search(v, 25, part);
    EXPECT_EQ(r.size(), 25u);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_TRUE(seen.insert(r[i].page_id).second);
      if (part) {
        EXPECT_EQ(c.at(r[i].page_id).meta.partition, *part);
      }
      if (i > 0) {
        EXPECT_TRUE(candidate_before(r[i - 1], r[i]));
      }
    }
  }
}

TEST(Hnsw, EmptyAndSmallPartitions) {
  const auto c = testing::random_corpus(500, 8, 1, 8, 3);
  const auto idx = HnswIndex::build(c);
  testing::Gauss g(9);
  const auto v = testing::gaussian_row(g, 8);
  EXPECT_TRUE(idx.search(v, 5, Partition::kBreast).empty());
  // A partition member count below k returns all members.
  const auto small = testing::random_corpus(12, 8, 1, 8, 3);
  const auto sidx = HnswIndex::build(small);
  EXPECT_EQ(sidx.search(v, 10, Partition::kCytology).size(), 4u);
}

TEST(Hnsw, SameSeedSameGraphAndDifferentSeedDiffers) {
  const auto c = testing::random_corpus(800, 12, 1, 10);
  const auto a = HnswIndex::build(c);
  const auto b = HnswIndex::build(c);
  EXPECT_EQ(a.links(), b.links());
  HnswParams p;
  p.seed = 43;
  EXPECT_NE(HnswIndex::build(c, p).links(), a.links());
}

TEST(Hnsw, RecallOnAnisotropicGaussian) {
  const auto c = testing::spectral_corpus(3000, 32, 0.5, 11);
  const auto idx = HnswIndex::build(c);
  testing::Gauss g(12);
  double recall = 0;
  for (int q = 0; q < 100; ++q) {
    const auto v = testing::spectral_row(g, 32, 0.5);
    std::set<std::string> truth;
    for (const auto& e : exact_topk(c, v, 20)) truth.insert(e.page_id);
    for (const auto& e : idx.search(v, 20)) recall += truth.count(e.page_id) / 20.0;
  }
  EXPECT_GE(recall / 100, 0.95);
}

TEST(Hnsw, SaveLoadPreservesGraphAndResults) {
  testing::TempDir dir;
  const auto c = testing::random_corpus(600, 8, 2, 13, 5);
  const auto idx = HnswIndex::build(c);
  idx.save(dir / "i.frhn");
  const auto back = HnswIndex::load(dir / "i.frhn");
  EXPECT_EQ(back.links(), idx.links());
  EXPECT_EQ(back.size(), idx.size());
  EXPECT_EQ(back.params().M, idx.params().M);
  testing::Gauss g(14);
  for (int q = 0; q < 20; ++q) {
    const auto v = testing::gaussian_row(g, 8);
    EXPECT_EQ(back.search(v, 10), idx.search(v, 10));
    EXPECT_EQ(back.search(v, 10, Partition::kCytology), idx.search(v, 10, Partition::kCytology));
  }
}

TEST(Hnsw, CorruptFilesAreRejected) {
  testing::TempDir dir;
  const auto idx = HnswIndex::build(testing::random_corpus(50, 4, 1, 15));
  idx.save(dir / "i.frhn");
  std::ifstream in(dir / "i.frhn", std::ios::binary);
  std::vector<char> bytes{std::istreambuf_iterator<char>(in), {}};
  auto write = [&](const std::vector<char>& b) {
    std::ofstream(dir / "x.frhn", std::ios::binary | std::ios::trunc).write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  auto bad = bytes;
  bad[0] = 'X';
  write(bad);
  EXPECT_FR_ERROR(HnswIndex::load(dir / "x.frhn"), ErrorCode::kFormat);
  bad = bytes;
  bad.push_back(1);
  write(bad);
  EXPECT_FR_ERROR(HnswIndex::load(dir / "x.frhn"), ErrorCode::kFormat);
  bad = bytes;
  bad.resize(bad.size() / 2);
  write(bad);
  EXPECT_FR_ERROR(HnswIndex::load(dir / "x.frhn"), ErrorCode::kFormat);
  bad = bytes;
  bad[4] = 9;  // version
  write(bad);
  EXPECT_FR_ERROR(HnswIndex::load(dir / "x.frhn"), ErrorCode::kFormat);
  EXPECT_FR_ERROR(HnswIndex::load(dir / "missing.frhn"), ErrorCode::kIo);
}

TEST(Hnsw, InputValidation) {
  const auto c = testing::random_corpus(20, 4, 1, 16);
  EXPECT_FR_ERROR(HnswIndex::build(Corpus{}), ErrorCode::kInvalidArgument);
  HnswParams p;
  p.M = 1;
  EXPECT_FR_ERROR(HnswIndex::build(c, p), ErrorCode::kInvalidArgument);
  const auto idx = HnswIndex::build(c);
  const std::vector<float> wrong(5, 1.0f), right(4, 1.0f);
  EXPECT_FR_ERROR(idx.search(wrong, 3), ErrorCode::kDimMismatch);
  EXPECT_FR_ERROR(idx.search(right, 0), ErrorCode::kInvalidArgument);
  EXPECT_FR_ERROR(exact_topk(c, wrong, 3), ErrorCode::kDimMismatch);
}

TEST(ExactTopk, OrthogonalPagesAndTieBreak) {
  std::vector<PageRecord> recs;
  const std::vector<std::vector<float>> rows = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 0}};
  const char* ids[] = {"c", "b", "a", "a2"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    PageRecord r;
    r.meta = {ids[i], "book", static_cast<std::int64_t>(i + 1), Partition::kBreast, 1};
    r.embedding = MultiVector::from_rows({rows[i]});
    recs.push_back(std::move(r));
  }
  const auto c = Corpus::from_records(recs);
  const std::vector<float> q = {0, 1, 0};
  const auto r = exact_topk(c, q, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].page_id, "a2");  // tie with "b" at 1.0; smaller id first
  EXPECT_EQ(r[1].page_id, "b");
  // Prefix property.
  const auto r2 = exact_topk(c, q, 2);
  EXPECT_EQ(r2[0].page_id, r[0].page_id);
  EXPECT_EQ(r2[1].page_id, r[1].page_id);
}

TEST(ExactTopk, MatchesIndependentSort) {
  const auto c = testing::random_corpus(300, 6, 2, 19);
  testing::Gauss g(20);
  const auto v = testing::gaussian_row(g, 6);
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 0;
    for (std::size_t d = 0; d < 6; ++d) s += double(v[d]) * c.page(i).pooled[d];
    all.emplace_back(-s, c.page(i).meta.page_id);
  }
  std::sort(all.begin(), all.end());
  const auto r = exact_topk(c, v, 50);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(r[i].page_id, all[i].second);
}

}  // namespace
}  // namespace fuserank
