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

#include "fuserank/store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <utility>

#include <json.hpp>

#include "fuserank/error.hpp"
#include "io_util.hpp"

namespace fuserank {

using nlohmann::json;

Partition require_partition(std::string_view name) {
  if (auto p = parse_partition(name)) return *p;
  throw Error(ErrorCode::kUnknownPartition, "unknown partition \"" + std::string(name) + "\"");
}

namespace {

constexpr std::array<std::uint8_t, 4> kPgvMagic = {'P', 'G', 'V', '1'};

template <typename T>
T require_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kFormat, where + ": missing field \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kFormat, where + ": field \"" + key + "\" has the wrong type");
  }
}

void validate_pages(const std::vector<PageMeta>& pages) {
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::int64_t>> book_pages;
  for (const auto& p : pages) {
    if (p.page_id.empty()) throw Error(ErrorCode::kFormat, "empty page_id");
    if (p.page_number < 1) {
      throw Error(ErrorCode::kFormat, "page " + p.page_id + ": page_number must be >= 1");
    }
    if (!ids.insert(p.page_id).second) {
      throw Error(ErrorCode::kDuplicatePage, "duplicate page_id " + p.page_id);
    }
    if (!book_pages.emplace(p.book_id, p.page_number).second) {
      throw Error(ErrorCode::kDuplicatePage, "duplicate (book_id, page_number) = (" + p.book_id +
                                                 ", " + std::to_string(p.page_number) + ")");
    }
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = io::load_le_u32(bytes_.data() + pos_);
    pos_ += 4;
    return v;
  }

  void floats(float* out, std::size_t n, const char* what) {
    need(n * 4, what);
    for (std::size_t i = 0; i < n; ++i) out[i] = io::load_le_f32(bytes_.data() + pos_ + 4 * i);
    pos_ += n * 4;
  }

  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kFormat, std::string("embedding file truncated while reading ") + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

CorpusManifest parse_manifest(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kFormat, "manifest must be a JSON object");

  CorpusManifest m;
  m.dim = require_field<std::uint32_t>(doc, "dim", "manifest");
  if (m.dim == 0) throw Error(ErrorCode::kFormat, "manifest dim must be >= 1");
  m.embedding_file = require_field<std::string>(doc, "embedding_file", "manifest");
  m.checksum = require_field<std::string>(doc, "checksum", "manifest");
  const auto pages = doc.find("pages");
  if (pages == doc.end() || !pages->is_array()) {
    throw Error(ErrorCode::kFormat, "manifest: \"pages\" must be an array");
  }
  m.pages.reserve(pages->size());
  for (std::size_t i = 0; i < pages->size(); ++i) {
    const json& rec = (*pages)[i];
    const std::string where = "manifest page " + std::to_string(i);
    if (!rec.is_object()) throw Error(ErrorCode::kFormat, where + " is not an object");
    PageMeta p;
    p.page_id = require_field<std::string>(rec, "page_id", where);
    p.book_id = require_field<std::string>(rec, "book_id", where);
    p.page_number = require_field<std::int64_t>(rec, "page_number", where);
    p.partition = require_partition(require_field<std::string>(rec, "partition", where));
    p.row_count = require_field<std::uint32_t>(rec, "row_count", where);
    if (p.row_count == 0) throw Error(ErrorCode::kFormat, where + ": row_count must be >= 1");
    m.pages.push_back(std::move(p));
  }
  validate_pages(m.pages);
  return m;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(io::read_text_file(path));
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  json pages = json::array();
  for (const auto& p : manifest.pages) {
    pages.push_back({{"page_id", p.page_id},
                     {"book_id", p.book_id},
                     {"page_number", p.page_number},
                     {"partition", std::string(partition_name(p.partition))},
                     {"row_count", p.row_count}});
  }
  json doc = {{"dim", manifest.dim},
              {"embedding_file", manifest.embedding_file},
              {"checksum", manifest.checksum},
              {"pages", std::move(pages)}};
  return doc.dump(2) + "\n";
}

NeighborGraph::NeighborGraph(const std::vector<PageMeta>& pages) {
  std::map<std::pair<std::string, std::int64_t>, const PageMeta*> by_position;
  for (const auto& p : pages) by_position[{p.book_id, p.page_number}] = &p;
  for (const auto& p : pages) {
    auto& adj = adjacency_[p.page_id];
    for (std::int64_t delta : {-1, 1}) {
      auto it = by_position.find({p.book_id, p.page_number + delta});
      if (it != by_position.end()) adj.push_back(it->second->page_id);
    }
    std::sort(adj.begin(), adj.end());
  }
}

bool NeighborGraph::contains(std::string_view page_id) const {
  return adjacency_.find(std::string(page_id)) != adjacency_.end();
}

std::vector<std::string> NeighborGraph::neighbors(std::string_view page_id) const {
  auto it = adjacency_.find(std::string(page_id));
  if (it == adjacency_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown page_id " + std::string(page_id));
  }
  return it->second;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInternal, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  const auto bytes = io::read_binary_file(path);
  return sha256_hex(bytes);
}

Corpus Corpus::from_records(std::vector<PageRecord> records) {
  std::vector<PageMeta> metas;
  metas.reserve(records.size());
  for (const auto& r : records) metas.push_back(r.meta);
  validate_pages(metas);

  auto shared = std::make_shared<Shared>();
  std::size_t dim = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (r.embedding.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "page " + r.meta.page_id + " has no embedding rows");
    }
    if (i == 0) dim = r.embedding.dim();
    if (r.embedding.dim() != dim) {
      throw Error(ErrorCode::kDimMismatch, "page " + r.meta.page_id + " has dim " +
                                               std::to_string(r.embedding.dim()) + ", expected " +
                                               std::to_string(dim));
    }
    r.meta.row_count = static_cast<std::uint32_t>(r.embedding.rows());
    r.pooled = column_pool(r.embedding);
    shared->by_id.emplace(r.meta.page_id, static_cast<std::uint32_t>(i));
  }
  shared->graph = std::make_unique<NeighborGraph>(metas);
  shared->records = std::move(records);

  Corpus c;
  c.members_.resize(shared->records.size());
  for (std::size_t i = 0; i < c.members_.size(); ++i) c.members_[i] = static_cast<std::uint32_t>(i);
  c.shared_ = std::move(shared);
  return c;
}

std::size_t Corpus::dim() const noexcept {
  if (!shared_ || shared_->records.empty()) return 0;
  return shared_->records.front().embedding.dim();
}

const PageRecord* Corpus::find(std::string_view page_id) const {
  if (!shared_) return nullptr;
  auto it = shared_->by_id.find(std::string(page_id));
  if (it == shared_->by_id.end()) return nullptr;
  const PageRecord& r = shared_->records[it->second];
  if (filter_ && r.meta.partition != *filter_) return nullptr;
  return &r;
}

const PageRecord& Corpus::at(std::string_view page_id) const {
  if (const auto* r = find(page_id)) return *r;
  throw Error(ErrorCode::kNotFound, "unknown page_id " + std::string(page_id));
}

std::vector<std::string> Corpus::neighbors(std::string_view page_id) const {
  if (!shared_ || !find(page_id)) {
    throw Error(ErrorCode::kNotFound, "unknown page_id " + std::string(page_id));
  }
  return shared_->graph->neighbors(page_id);
}

Corpus Corpus::filter_by_partition(Partition partition) const {
  Corpus view;
  view.shared_ = shared_;
  view.filter_ = partition;
  for (std::uint32_t m : members_) {
    if (shared_->records[m].meta.partition == partition) view.members_.push_back(m);
  }
  return view;
}

CorpusManifest Corpus::manifest() const {
  CorpusManifest m;
  m.dim = static_cast<std::uint32_t>(dim());
  for (std::size_t i = 0; i < size(); ++i) m.pages.push_back(page(i).meta);
  return m;
}

std::vector<std::uint8_t> encode_pgv1(const Corpus& corpus) {
  std::vector<std::uint8_t> out(kPgvMagic.begin(), kPgvMagic.end());
  io::append_le_u32(out, static_cast<std::uint32_t>(corpus.dim()));
  io::append_le_u32(out, static_cast<std::uint32_t>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& mv = corpus.page(i).embedding;
    io::append_le_u32(out, static_cast<std::uint32_t>(mv.rows()));
    for (float v : mv.data()) io::append_le_f32(out, v);
  }
  return out;
}

Corpus ingest(const std::filesystem::path& manifest_path,
              const std::filesystem::path& embeddings_path) {
  CorpusManifest manifest = load_manifest(manifest_path);
  std::filesystem::path emb_path = embeddings_path;
  if (emb_path.empty()) {
    emb_path = std::filesystem::path(manifest.embedding_file);
    if (emb_path.is_relative()) emb_path = manifest_path.parent_path() / emb_path;
  }
  const auto bytes = io::read_binary_file(emb_path);
  const std::string digest = sha256_hex(bytes);
  std::string expected = manifest.checksum;
  std::transform(expected.begin(), expected.end(), expected.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (digest != expected) {
    throw Error(ErrorCode::kChecksumMismatch,
                "embedding file checksum " + digest + " != manifest checksum " + manifest.checksum);
  }

  if (bytes.size() < 4 || !std::equal(kPgvMagic.begin(), kPgvMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::kFormat, "embedding file does not start with PGV1 magic");
  }
  Reader rd(std::span<const std::uint8_t>(bytes).subspan(4));
  const std::uint32_t dim = rd.u32("dim");
  const std::uint32_t count = rd.u32("record count");
  if (dim != manifest.dim) {
    throw Error(ErrorCode::kDimMismatch, "embedding file dim " + std::to_string(dim) +
                                             " != manifest dim " + std::to_string(manifest.dim));
  }
  if (count != manifest.pages.size()) {
    throw Error(ErrorCode::kFormat, "embedding file holds " + std::to_string(count) +
                                        " records, manifest lists " +
                                        std::to_string(manifest.pages.size()));
  }

  std::vector<PageRecord> records;
  records.reserve(count);
  for (const auto& meta : manifest.pages) {
    const std::uint32_t rows = rd.u32("row count");
    if (rows != meta.row_count) {
      throw Error(ErrorCode::kFormat, "page " + meta.page_id + ": embedding block has " +
                                          std::to_string(rows) + " rows, manifest declares " +
                                          std::to_string(meta.row_count));
    }
    std::vector<float> data(static_cast<std::size_t>(rows) * dim);
    rd.floats(data.data(), data.size(), "embedding rows");
    PageRecord rec;
    rec.meta = meta;
    try {
      rec.embedding = MultiVector(std::move(data), rows, dim);
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, "page " + meta.page_id + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  if (!rd.at_end()) throw Error(ErrorCode::kFormat, "trailing bytes after last embedding record");
  return Corpus::from_records(std::move(records));
}

void serialize(const Corpus& corpus, const std::filesystem::path& manifest_path,
               const std::filesystem::path& embeddings_path) {
  const auto bytes = encode_pgv1(corpus);
  io::write_binary_file(embeddings_path, bytes);

  CorpusManifest m = corpus.manifest();
  m.checksum = sha256_hex(bytes);
  std::error_code ec;
  auto rel = std::filesystem::relative(std::filesystem::absolute(embeddings_path),
                                       std::filesystem::absolute(manifest_path).parent_path(), ec);
  m.embedding_file = (ec || rel.empty()) ? embeddings_path.string() : rel.generic_string();
  io::write_text_file(manifest_path, manifest_to_json(m));
}

}  // namespace fuserank
