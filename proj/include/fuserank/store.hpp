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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fuserank/embedding.hpp"
#include "fuserank/partition.hpp"

namespace fuserank {

struct PageMeta {
  std::string page_id;
  std::string book_id;
  std::int64_t page_number = 1;
  Partition partition = Partition::kGeneralComprehensive;
  std::uint32_t row_count = 0;
};

struct CorpusManifest {
  std::uint32_t dim = 0;
  std::string embedding_file;
  std::string checksum;  // lowercase SHA-256 hex of the embedding file
  std::vector<PageMeta> pages;
};

struct PageRecord {
  PageMeta meta;
  MultiVector embedding;
  std::vector<float> pooled;

  const std::string& page_id() const noexcept { return meta.page_id; }
};

/// Manifest parsing and validation without touching the embedding file.
/// Detects unknown partitions, duplicate page ids and duplicate
/// (book_id, page_number) pairs.
CorpusManifest parse_manifest(std::string_view json_text);
CorpusManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const CorpusManifest& manifest);

/// Page-adjacency relation over manifest metadata: same book, page_number +/- 1.
class NeighborGraph {
 public:
  explicit NeighborGraph(const std::vector<PageMeta>& pages);

  bool contains(std::string_view page_id) const;
  /// Sorted page ids (0, 1 or 2 entries). Throws Error(kNotFound).
  std::vector<std::string> neighbors(std::string_view page_id) const;

 private:
  std::unordered_map<std::string, std::vector<std::string>> adjacency_;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

/// Immutable page collection. Copies are cheap and share storage; a
/// partition view shares storage with the corpus it was filtered from.
class Corpus {
 public:
  Corpus() = default;

  /// Builds a corpus from in-memory records (validated like a manifest).
  static Corpus from_records(std::vector<PageRecord> records);

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::size_t dim() const noexcept;

  const PageRecord& page(std::size_t i) const { return shared_->records[members_[i]]; }
  /// nullptr when absent from this corpus or view.
  const PageRecord* find(std::string_view page_id) const;
  const PageRecord& at(std::string_view page_id) const;

  /// Sorted ids of the adjacent pages of the same book present in the
  /// full corpus. Throws Error(kNotFound) for unknown ids.
  std::vector<std::string> neighbors(std::string_view page_id) const;

  Corpus filter_by_partition(Partition partition) const;
  std::optional<Partition> partition_filter() const noexcept { return filter_; }

  CorpusManifest manifest() const;

 private:
  struct Shared {
    std::vector<PageRecord> records;
    std::unordered_map<std::string, std::uint32_t> by_id;
    std::unique_ptr<NeighborGraph> graph;
  };

  std::shared_ptr<const Shared> shared_;
  std::vector<std::uint32_t> members_;
  std::optional<Partition> filter_;
};

/// Reads a manifest and its PGV1 embedding file. When embeddings_path is
/// empty the manifest's embedding_file is resolved relative to the manifest.
Corpus ingest(const std::filesystem::path& manifest_path,
              const std::filesystem::path& embeddings_path = {});

/// Writes the PGV1 file and a manifest carrying its checksum. The manifest's
/// embedding_file field is the embeddings path relative to the manifest dir
/// when possible.
void serialize(const Corpus& corpus, const std::filesystem::path& manifest_path,
               const std::filesystem::path& embeddings_path);

/// PGV1 encoding of a corpus payload, records in corpus order.
std::vector<std::uint8_t> encode_pgv1(const Corpus& corpus);

}  // namespace fuserank
