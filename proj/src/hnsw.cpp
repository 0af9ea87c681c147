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

#include "fuserank/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

#include "fuserank/error.hpp"
#include "io_util.hpp"

namespace fuserank {

namespace {

constexpr std::uint8_t kIndexMagic[4] = {'F', 'R', 'H', 'N'};
constexpr std::uint32_t kIndexVersion = 1;

// Max-heap on similarity; equal similarities pop the lower node id first.
struct CloserFirst {
  template <typename S>
  bool operator()(const S& a, const S& b) const noexcept {
    if (a.sim != b.sim) return a.sim < b.sim;
    return a.node > b.node;
  }
};

// Min-heap on similarity (the worst kept result sits on top).
struct FartherFirst {
  template <typename S>
  bool operator()(const S& a, const S& b) const noexcept {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.node < b.node;
  }
};

double unit_uniform(std::mt19937_64& rng) {
  // 53 random mantissa bits in [0, 1); portable across standard libraries.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_dim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw Error(ErrorCode::kDimMismatch,
                "query dim " + std::to_string(got) + " != index dim " + std::to_string(want));
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() {
    need(4);
    auto v = io::load_le_u32(bytes_.data() + pos_);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    auto v = io::load_le_u64(bytes_.data() + pos_);
    pos_ += 8;
    return v;
  }
  float f32() {
    need(4);
    auto v = io::load_le_f32(bytes_.data() + pos_);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kFormat, "index file truncated");
  }
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

double HnswIndex::sim(std::span<const float> q, std::uint32_t node) const noexcept {
  return dot(q, vec(node));
}

HnswIndex HnswIndex::build(const Corpus& corpus, const HnswParams& params) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot index an empty corpus");
  if (params.M < 2) throw Error(ErrorCode::kInvalidArgument, "HNSW M must be >= 2");
  if (params.ef_construction < 1 || params.ef_search < 1) {
    throw Error(ErrorCode::kInvalidArgument, "HNSW ef values must be >= 1");
  }

  HnswIndex idx;
  idx.params_ = params;
  idx.dim_ = corpus.dim();
  const std::size_t n = corpus.size();
  idx.vectors_.reserve(n * idx.dim_);
  idx.page_ids_.reserve(n);
  idx.partitions_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = corpus.page(i);
    idx.vectors_.insert(idx.vectors_.end(), rec.pooled.begin(), rec.pooled.end());
    idx.page_ids_.push_back(rec.page_id());
    idx.partitions_.push_back(rec.meta.partition);
    ++idx.partition_sizes_[partition_index(rec.meta.partition)];
  }

  std::mt19937_64 rng(params.seed);
  const double level_mult = 1.0 / std::log(static_cast<double>(params.M));
  idx.links_.resize(n);
  for (std::uint32_t node = 0; node < n; ++node) {
    const double u = 1.0 - unit_uniform(rng);  // (0, 1]
    const auto level = static_cast<std::uint32_t>(std::floor(-std::log(u) * level_mult));
    idx.insert(node, level);
  }
  return idx;
}

void HnswIndex::insert(std::uint32_t node, std::uint32_t level) {
  links_[node].assign(level + 1, {});
  if (node == 0) {
    entry_point_ = 0;
    max_level_ = level;
    return;
  }
  const auto q = vec(node);
  std::uint32_t entry = entry_point_;
  if (max_level_ > level) entry = greedy_descend(q, max_level_, level + 1);

  for (std::int64_t l = std::min(level, max_level_); l >= 0; --l) {
    const auto layer = static_cast<std::uint32_t>(l);
    auto found = search_layer(q, entry, params_.ef_construction, layer, std::nullopt);
    entry = found.front().node;
    const auto chosen = select_neighbors(found, params_.M);
    links_[node][layer] = chosen;

    const std::size_t max_degree = layer == 0 ? 2 * params_.M : params_.M;
    for (std::uint32_t nb : chosen) {
      auto& nb_links = links_[nb][layer];
      nb_links.push_back(node);
      if (nb_links.size() <= max_degree) continue;
      std::vector<Scored> pool;
      pool.reserve(nb_links.size());
      const auto nb_vec = vec(nb);
      for (std::uint32_t c : nb_links) pool.push_back({sim(nb_vec, c), c});
      std::sort(pool.begin(), pool.end(), CloserFirst{});
      std::reverse(pool.begin(), pool.end());
      nb_links = select_neighbors(std::move(pool), max_degree);
    }
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_point_ = node;
  }
}

std::uint32_t HnswIndex::greedy_descend(std::span<const float> q, std::uint32_t from_level,
                                        std::uint32_t to_level) const {
  std::uint32_t cur = entry_point_;
  double cur_sim = sim(q, cur);
  for (std::int64_t l = from_level; l >= static_cast<std::int64_t>(to_level); --l) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::uint32_t nb : links_[cur][static_cast<std::size_t>(l)]) {
        const double s = sim(q, nb);
        if (s > cur_sim || (s == cur_sim && nb < cur)) {
          cur = nb;
          cur_sim = s;
          moved = true;
        }
      }
    }
  }
  return cur;
}

// Beam search on one layer. Results are sorted best first. With a filter,
// every node still steers the walk but only matching nodes are kept.
std::vector<HnswIndex::Scored> HnswIndex::search_layer(std::span<const float> q,
                                                       std::uint32_t entry, std::size_t ef,
                                                       std::uint32_t level,
                                                       std::optional<Partition> filter) const {
  std::vector<char> visited(size(), 0);
  std::priority_queue<Scored, std::vector<Scored>, CloserFirst> frontier;
  std::priority_queue<Scored, std::vector<Scored>, FartherFirst> kept;
  auto admits = [&](std::uint32_t node) { return !filter || partitions_[node] == *filter; };

  const Scored start{sim(q, entry), entry};
  visited[entry] = 1;
  frontier.push(start);
  if (admits(entry)) kept.push(start);

  while (!frontier.empty()) {
    const Scored cur = frontier.top();
    if (kept.size() >= ef && cur.sim < kept.top().sim) break;
    frontier.pop();
    for (std::uint32_t nb : links_[cur.node][level]) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      const Scored cand{sim(q, nb), nb};
      if (kept.size() < ef || cand.sim > kept.top().sim) {
        frontier.push(cand);
        if (admits(nb)) {
          kept.push(cand);
          if (kept.size() > ef) kept.pop();
        }
      }
    }
  }

  std::vector<Scored> out;
  out.reserve(kept.size());
  while (!kept.empty()) {
    out.push_back(kept.top());
    kept.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Diversity heuristic: keep a candidate only if it is closer to the query
// than to every neighbor already kept. Input must be sorted best first.
std::vector<std::uint32_t> HnswIndex::select_neighbors(std::vector<Scored> candidates,
                                                       std::size_t max_count) const {
  std::vector<std::uint32_t> out;
  out.reserve(max_count);
  for (const Scored& c : candidates) {
    if (out.size() >= max_count) break;
    const auto cv = vec(c.node);
    bool keep = true;
    for (std::uint32_t r : out) {
      if (sim(cv, r) > c.sim) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(c.node);
  }
  return out;
}

std::vector<Candidate> HnswIndex::finish(std::vector<Scored> found, std::size_t k) const {
  std::vector<Candidate> out;
  out.reserve(found.size());
  for (const auto& s : found) out.push_back({page_ids_[s.node], s.sim});
  std::sort(out.begin(), out.end(), candidate_before);
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<Candidate> HnswIndex::scan(std::span<const float> q, std::size_t k,
                                       std::optional<Partition> filter) const {
  std::vector<Scored> all;
  for (std::uint32_t node = 0; node < size(); ++node) {
    if (filter && partitions_[node] != *filter) continue;
    all.push_back({sim(q, node), node});
  }
  return finish(std::move(all), k);
}

std::vector<Candidate> HnswIndex::search(std::span<const float> query, std::size_t k,
                                         std::optional<Partition> partition) const {
  check_dim(query.size(), dim_);
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (size() == 0) return {};
  const std::size_t ef = std::max<std::size_t>(params_.ef_search, k);

  if (partition) {
    const std::size_t members = partition_sizes_[partition_index(*partition)];
    if (members == 0) return {};
    if (members * 10 < size() || members <= ef) return scan(query, k, partition);
  }
  if (ef >= size()) return scan(query, k, partition);

  std::uint32_t entry = entry_point_;
  if (max_level_ > 0) entry = greedy_descend(query, max_level_, 1);
  return finish(search_layer(query, entry, ef, 0, partition), k);
}

void HnswIndex::save(const std::filesystem::path& path) const {
  std::vector<std::uint8_t> out(std::begin(kIndexMagic), std::end(kIndexMagic));
  io::append_le_u32(out, kIndexVersion);
  io::append_le_u32(out, static_cast<std::uint32_t>(dim_));
  io::append_le_u32(out, static_cast<std::uint32_t>(size()));
  io::append_le_u32(out, params_.M);
  io::append_le_u32(out, params_.ef_construction);
  io::append_le_u32(out, params_.ef_search);
  io::append_le_u64(out, params_.seed);
  io::append_le_u32(out, entry_point_);
  io::append_le_u32(out, max_level_);
  for (std::size_t node = 0; node < size(); ++node) {
    const auto& id = page_ids_[node];
    io::append_le_u32(out, static_cast<std::uint32_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
    io::append_le_u32(out, static_cast<std::uint32_t>(partitions_[node]));
    io::append_le_u32(out, static_cast<std::uint32_t>(links_[node].size() - 1));
    for (const auto& layer : links_[node]) {
      io::append_le_u32(out, static_cast<std::uint32_t>(layer.size()));
      for (std::uint32_t nb : layer) io::append_le_u32(out, nb);
    }
  }
  for (float v : vectors_) io::append_le_f32(out, v);
  io::write_binary_file(path, out);
}

HnswIndex HnswIndex::load(const std::filesystem::path& path) {
  auto bytes = io::read_binary_file(path);
  if (bytes.size() < 8 || !std::equal(std::begin(kIndexMagic), std::end(kIndexMagic), bytes.begin())) {
    throw Error(ErrorCode::kFormat, path.string() + " is not a fuserank index file");
  }
  ByteReader rd(std::vector<std::uint8_t>(bytes.begin() + 4, bytes.end()));
  if (const auto version = rd.u32(); version != kIndexVersion) {
    throw Error(ErrorCode::kFormat, "unsupported index version " + std::to_string(version));
  }
  HnswIndex idx;
  idx.dim_ = rd.u32();
  const std::uint32_t n = rd.u32();
  idx.params_.M = rd.u32();
  idx.params_.ef_construction = rd.u32();
  idx.params_.ef_search = rd.u32();
  idx.params_.seed = rd.u64();
  idx.entry_point_ = rd.u32();
  idx.max_level_ = rd.u32();
  if (idx.dim_ == 0 || (n > 0 && idx.entry_point_ >= n)) {
    throw Error(ErrorCode::kFormat, "corrupt index header");
  }
  idx.page_ids_.reserve(n);
  idx.partitions_.reserve(n);
  idx.links_.resize(n);
  for (std::uint32_t node = 0; node < n; ++node) {
    idx.page_ids_.push_back(rd.str(rd.u32()));
    const std::uint32_t part = rd.u32();
    if (part >= kPartitionCount) throw Error(ErrorCode::kFormat, "corrupt partition id in index");
    idx.partitions_.push_back(static_cast<Partition>(part));
    ++idx.partition_sizes_[part];
    const std::uint32_t level = rd.u32();
    if (level > idx.max_level_) throw Error(ErrorCode::kFormat, "node level exceeds max level");
    idx.links_[node].resize(level + 1);
    for (auto& layer : idx.links_[node]) {
      const std::uint32_t deg = rd.u32();
      layer.reserve(deg);
      for (std::uint32_t j = 0; j < deg; ++j) {
        const std::uint32_t nb = rd.u32();
        if (nb >= n) throw Error(ErrorCode::kFormat, "neighbor id out of range");
        layer.push_back(nb);
      }
    }
  }
  idx.vectors_.resize(static_cast<std::size_t>(n) * idx.dim_);
  for (float& v : idx.vectors_) v = rd.f32();
  if (!rd.at_end()) throw Error(ErrorCode::kFormat, "trailing bytes in index file");
  return idx;
}

std::vector<Candidate> exact_topk(const Corpus& corpus, std::span<const float> query,
                                  std::size_t k, std::optional<Partition> partition) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (!corpus.empty()) check_dim(query.size(), corpus.dim());
  std::vector<Candidate> all;
  all.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& rec = corpus.page(i);
    if (partition && rec.meta.partition != *partition) continue;
    all.push_back({rec.page_id(), dot(query, rec.pooled)});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    candidate_before);
  all.resize(keep);
  return all;
}

}  // namespace fuserank
