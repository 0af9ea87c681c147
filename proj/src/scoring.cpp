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

#include "fuserank/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fuserank/error.hpp"

namespace fuserank {

namespace {

bool entry_before(const RankedEntry& a, const RankedEntry& b) noexcept {
  return ranks_before(a.score, a.page_id, b.score, b.page_id);
}

void require_same_dim(const MultiVector& a, const MultiVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "dim " + std::to_string(a.dim()) + " != dim " + std::to_string(b.dim()));
  }
}

}  // namespace

void QueryBundle::validate() const {
  if (!text && !image) throw Error(ErrorCode::kInvalidQuery, "query has neither text nor image rows");
  if (text && image && text->dim() != image->dim()) {
    throw Error(ErrorCode::kInvalidQuery, "text and image embeddings differ in dim");
  }
}

std::size_t QueryBundle::dim() const {
  validate();
  return text ? text->dim() : image->dim();
}

double maxsim_score(const MultiVector& query, const MultiVector& doc) {
  require_same_dim(query, doc);
  double total = 0.0;
  for (std::size_t i = 0; i < query.rows(); ++i) {
    const auto q = query.row(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < doc.rows(); ++j) best = std::max(best, dot(q, doc.row(j)));
    total += best;
  }
  return total;
}

double weimocir_score(const QueryBundle& query, const MultiVector& doc, double alpha) {
  query.validate();
  if (!query.text || !query.image) {
    throw Error(ErrorCode::kInvalidQuery, "weighted pooled fusion needs both text and image");
  }
  require_same_dim(*query.image, doc);
  const auto image = column_pool(*query.image);
  const auto text = column_pool(*query.text);
  std::vector<double> mixed(image.size());
  for (std::size_t d = 0; d < mixed.size(); ++d) {
    mixed[d] = (1.0 - alpha) * image[d] + alpha * static_cast<double>(text[d]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < doc.rows(); ++j) {
    const auto row = doc.row(j);
    double s = 0.0;
    for (std::size_t d = 0; d < mixed.size(); ++d) s += mixed[d] * row[d];
    total += s;
  }
  return total / static_cast<double>(doc.rows());
}

FusionBreakdown fusion_score(const SimilarityMatrix& text_sim, const SimilarityMatrix& image_sim,
                             const FusionParams& params) {
  if (text_sim.rows() == 0 || image_sim.rows() == 0 || text_sim.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "fusion needs non-empty similarity matrices");
  }
  if (text_sim.cols() != image_sim.cols()) {
    throw Error(ErrorCode::kDimMismatch,
                "text and image similarity disagree on document tokens (" +
                    std::to_string(text_sim.cols()) + " vs " + std::to_string(image_sim.cols()) + ")");
  }

  std::vector<double> row_std(text_sim.rows());
  double text_kurt = 0.0;
  double mean_max = 0.0;
  for (std::size_t i = 0; i < text_sim.rows(); ++i) {
    const RowStats s = row_stats(text_sim.row(i));
    row_std[i] = s.std;
    text_kurt += s.kurtosis;
    mean_max += s.max;
  }
  const double nt = static_cast<double>(text_sim.rows());
  text_kurt /= nt;
  mean_max /= nt;

  double image_kurt = 0.0;
  for (std::size_t i = 0; i < image_sim.rows(); ++i) image_kurt += row_stats(image_sim.row(i)).kurtosis;
  image_kurt /= static_cast<double>(image_sim.rows());

  FusionBreakdown b;
  b.term1_std_of_std = row_stats(row_std).std;
  b.term1_text_kurtosis_mean = text_kurt;
  b.term1_image_kurtosis_mean = image_kurt;
  b.term2_mean_max = mean_max;
  const double text_term = params.text_kurtosis_exponent == 2.0
                               ? text_kurt * text_kurt
                               : std::pow(text_kurt, params.text_kurtosis_exponent);
  b.total = params.term_weight * b.term1_std_of_std * text_term * image_kurt + mean_max;
  return b;
}

RankedList rerank(const QueryBundle& query, std::span<const CandidateDoc> candidates,
                  const FusionParams& params) {
  query.validate();
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "rerank needs candidates");

  RankedList out;
  out.entries.reserve(candidates.size());
  if (query.text && query.image) {
    for (const auto& c : candidates) {
      const MultiVector& doc = c.embedding.get();
      const auto b = fusion_score(similarity_matrix(*query.text, doc),
                                  similarity_matrix(*query.image, doc), params);
      out.entries.push_back({c.page_id, b.total, b});
    }
  } else {
    out.maxsim_fallback = true;
    const MultiVector& q = query.text ? *query.text : *query.image;
    for (const auto& c : candidates) {
      out.entries.push_back({c.page_id, maxsim_score(q, c.embedding.get()), std::nullopt});
    }
  }
  for (const auto& e : out.entries) {
    if (!std::isfinite(e.score)) {
      throw Error(ErrorCode::kComputation, "non-finite score for page " + e.page_id);
    }
  }
  std::sort(out.entries.begin(), out.entries.end(), entry_before);
  return out;
}

std::vector<RankedEntry> text_stage(const Corpus& corpus, const HnswIndex& index,
                                    const MultiVector& text_query, const RetrievalOptions& options) {
  if (options.k1 == 0) throw Error(ErrorCode::kInvalidArgument, "k1 must be >= 1");
  if (corpus.empty() || index.size() == 0) {
    throw Error(ErrorCode::kRetrievalUnavailable, "no pages to retrieve from");
  }
  const auto pooled = column_pool(text_query);
  const auto candidates = index.search(pooled, std::max(options.effective_pool(), options.k1),
                                       options.partition);
  std::vector<RankedEntry> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    const PageRecord* rec = corpus.find(c.page_id);
    if (!rec) {
      if (corpus.partition_filter()) continue;
      throw Error(ErrorCode::kNotFound, "index page " + c.page_id + " is missing from the corpus");
    }
    scored.push_back({c.page_id, maxsim_score(text_query, rec->embedding), std::nullopt});
  }
  std::sort(scored.begin(), scored.end(), entry_before);
  if (scored.size() > options.k1) scored.resize(options.k1);
  return scored;
}

RankedList retrieve_then_rerank(const Corpus& corpus, const HnswIndex& index,
                                const QueryBundle& query, const RetrievalOptions& options,
                                std::vector<RankedEntry>* stage1_out) {
  query.validate();
  if (!query.text) throw Error(ErrorCode::kInvalidQuery, "text-based first stage needs text rows");
  if (options.k2 == 0 || options.k2 > options.k1) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= k2 <= k1");
  }
  if (query.dim() != index.dim()) {
    throw Error(ErrorCode::kDimMismatch, "query dim " + std::to_string(query.dim()) +
                                             " != index dim " + std::to_string(index.dim()));
  }
  const auto stage1 = text_stage(corpus, index, *query.text, options);
  if (stage1_out) *stage1_out = stage1;
  if (stage1.empty()) return {};

  std::vector<CandidateDoc> docs;
  docs.reserve(stage1.size());
  for (const auto& e : stage1) docs.push_back({e.page_id, std::cref(corpus.at(e.page_id).embedding)});
  RankedList ranked = rerank(query, docs, options.fusion);
  if (ranked.entries.size() > options.k2) ranked.entries.resize(options.k2);
  return ranked;
}

FusionParams grid_search_fusion(std::span<const TuningExample> examples,
                                std::span<const double> exponents,
                                std::span<const double> weights, std::size_t k) {
  if (examples.empty() || exponents.empty() || weights.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "grid search needs examples and a non-empty grid");
  }
  FusionParams best;
  double best_mrr = -1.0;
  for (double exponent : exponents) {
    for (double weight : weights) {
      const FusionParams p{exponent, weight};
      double mrr = 0.0;
      for (const auto& ex : examples) {
        const auto ranked = rerank(ex.query, ex.candidates, p);
        for (std::size_t r = 0; r < ranked.entries.size() && r < k; ++r) {
          if (ranked.entries[r].page_id == ex.target_page_id) {
            mrr += 1.0 / static_cast<double>(r + 1);
            break;
          }
        }
      }
      mrr /= static_cast<double>(examples.size());
      if (mrr > best_mrr) {
        best_mrr = mrr;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace fuserank
