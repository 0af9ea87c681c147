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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fuserank/embedding.hpp"
#include "fuserank/hnsw.hpp"
#include "fuserank/store.hpp"

namespace fuserank {

/// Query-side embeddings. At least one modality; equal dims when both.
struct QueryBundle {
  std::optional<MultiVector> text;
  std::optional<MultiVector> image;

  /// Throws Error(kInvalidQuery).
  void validate() const;
  std::size_t dim() const;
};

/// Knobs on the fusion score. Defaults reproduce the closed form exactly:
/// weight * std_of_std * text_kurtosis^exponent * image_kurtosis + mean_max.
struct FusionParams {
  double text_kurtosis_exponent = 2.0;
  double term_weight = 1.0;
};

struct FusionBreakdown {
  double term1_std_of_std = 0.0;           // std over text rows of row std
  double term1_text_kurtosis_mean = 0.0;   // mean over text rows of row kurtosis
  double term1_image_kurtosis_mean = 0.0;  // mean over image rows of row kurtosis
  double term2_mean_max = 0.0;             // mean over text rows of row max
  double total = 0.0;
};

struct RankedEntry {
  std::string page_id;
  double score = 0.0;
  std::optional<FusionBreakdown> breakdown;
};

struct RankedList {
  std::vector<RankedEntry> entries;
  /// Set when the query lacked a modality and MaxSim ordering was used.
  bool maxsim_fallback = false;
};

struct CandidateDoc {
  std::string page_id;
  std::reference_wrapper<const MultiVector> embedding;
};

/// Sum over query rows of the best inner product against any doc row.
double maxsim_score(const MultiVector& query, const MultiVector& doc);

/// Pools each modality, mixes q = (1 - alpha) * image + alpha * text, and
/// scores by the mean inner product of q with the document rows.
double weimocir_score(const QueryBundle& query, const MultiVector& doc, double alpha = 0.1);

/// Statistics are taken along document tokens (columns) per query row and
/// then aggregated over rows. Throws Error(kDimMismatch) when the two
/// matrices disagree on the document token count.
FusionBreakdown fusion_score(const SimilarityMatrix& text_sim, const SimilarityMatrix& image_sim,
                             const FusionParams& params = {});

/// Fusion score of every candidate, sorted by (score desc, page_id asc).
/// Single-modality queries fall back to MaxSim on the present modality.
RankedList rerank(const QueryBundle& query, std::span<const CandidateDoc> candidates,
                  const FusionParams& params = {});

struct RetrievalOptions {
  std::size_t k1 = 20;
  std::size_t k2 = 1;
  /// Pooled-ANN candidates rescored by text MaxSim; default max(4 * k1, 64).
  std::optional<std::size_t> pool_size;
  std::optional<Partition> partition;
  FusionParams fusion;

  std::size_t effective_pool() const noexcept {
    return pool_size ? *pool_size : std::max<std::size_t>(4 * k1, 64);
  }
};

/// Stage 1 only: ANN candidates for the pooled text query, rescored by exact
/// text MaxSim, top k1 in global order.
std::vector<RankedEntry> text_stage(const Corpus& corpus, const HnswIndex& index,
                                    const MultiVector& text_query, const RetrievalOptions& options);

/// Stage 1 followed by fusion rerank of the k1 survivors; returns the top k2.
/// When stage1 is non-null it receives the stage-1 survivors.
RankedList retrieve_then_rerank(const Corpus& corpus, const HnswIndex& index,
                                const QueryBundle& query, const RetrievalOptions& options = {},
                                std::vector<RankedEntry>* stage1 = nullptr);

/// One labelled query for fusion-parameter tuning.
struct TuningExample {
  QueryBundle query;
  std::vector<CandidateDoc> candidates;
  std::string target_page_id;
};

/// Exhaustive grid search maximizing MRR@k over the examples. Ties keep the
/// earliest grid point, with exponents as the outer loop.
FusionParams grid_search_fusion(std::span<const TuningExample> examples,
                                std::span<const double> exponents,
                                std::span<const double> weights, std::size_t k = 20);

}  // namespace fuserank
