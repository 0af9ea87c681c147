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
#include <vector>

#include "fuserank/partition.hpp"
#include "fuserank/store.hpp"

namespace fuserank {

struct HnswParams {
  std::uint32_t M = 16;
  std::uint32_t ef_construction = 200;
  std::uint32_t ef_search = 128;
  std::uint64_t seed = 42;
};

struct Candidate {
  std::string page_id;
  double score = 0.0;  // inner product of pooled vectors

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Global ordering: score descending, then page_id ascending.
inline bool ranks_before(double score_a, const std::string& id_a, double score_b,
                         const std::string& id_b) noexcept {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

inline bool candidate_before(const Candidate& a, const Candidate& b) noexcept {
  return ranks_before(a.score, a.page_id, b.score, b.page_id);
}

/// Hierarchical navigable small-world graph over pooled page vectors,
/// scored by inner product. Immutable after build; search is const and
/// safe to call concurrently.
class HnswIndex {
 public:
  /// links()[node][level] is the neighbor list of node at that level.
  using Adjacency = std::vector<std::vector<std::vector<std::uint32_t>>>;

  /// Nodes are inserted in corpus order; level draws come from a
  /// generator seeded with params.seed, so equal inputs give equal graphs.
  static HnswIndex build(const Corpus& corpus, const HnswParams& params = {});

  /// Up to k candidates in global order. Uses ef = max(ef_search, k).
  /// Partition filters are applied inside the beam search; partitions
  /// holding under a tenth of the index are scanned exhaustively instead.
  std::vector<Candidate> search(std::span<const float> query, std::size_t k,
                                std::optional<Partition> partition = std::nullopt) const;

  std::size_t size() const noexcept { return page_ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const HnswParams& params() const noexcept { return params_; }
  const Adjacency& links() const noexcept { return links_; }
  std::uint32_t entry_point() const noexcept { return entry_point_; }
  std::uint32_t max_level() const noexcept { return max_level_; }
  const std::string& page_id(std::size_t node) const { return page_ids_[node]; }

  /// Single-file format, see docs/FORMATS.md.
  void save(const std::filesystem::path& path) const;
  static HnswIndex load(const std::filesystem::path& path);

  /// Changes the query-time beam without rebuilding.
  void set_ef_search(std::uint32_t ef) noexcept { params_.ef_search = ef; }

 private:
  struct Scored {
    double sim;
    std::uint32_t node;
  };

  std::span<const float> vec(std::uint32_t node) const noexcept {
    return {vectors_.data() + static_cast<std::size_t>(node) * dim_, dim_};
  }
  double sim(std::span<const float> q, std::uint32_t node) const noexcept;

  std::uint32_t greedy_descend(std::span<const float> q, std::uint32_t from_level,
                               std::uint32_t to_level) const;
  std::vector<Scored> search_layer(std::span<const float> q, std::uint32_t entry,
                                   std::size_t ef, std::uint32_t level,
                                   std::optional<Partition> filter) const;
  std::vector<std::uint32_t> select_neighbors(std::vector<Scored> candidates,
                                              std::size_t max_count) const;
  void insert(std::uint32_t node, std::uint32_t level);
  std::vector<Candidate> scan(std::span<const float> q, std::size_t k,
                              std::optional<Partition> filter) const;
  std::vector<Candidate> finish(std::vector<Scored> found, std::size_t k) const;

  HnswParams params_;
  std::size_t dim_ = 0;
  std::vector<float> vectors_;
  std::vector<std::string> page_ids_;
  std::vector<Partition> partitions_;
  std::array<std::uint32_t, kPartitionCount> partition_sizes_{};
  Adjacency links_;
  std::uint32_t entry_point_ = 0;
  std::uint32_t max_level_ = 0;
};

/// Brute-force scan over pooled vectors with the same ordering as search.
std::vector<Candidate> exact_topk(const Corpus& corpus, std::span<const float> query,
                                  std::size_t k,
                                  std::optional<Partition> partition = std::nullopt);

}  // namespace fuserank
