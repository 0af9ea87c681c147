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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fuserank/grpo.hpp"
#include "fuserank/hnsw.hpp"
#include "fuserank/router.hpp"
#include "fuserank/scoring.hpp"
#include "fuserank/store.hpp"

namespace fuserank {

/// A diagnostic question with its candidate diagnoses. Each candidate
/// carries its own text embedding; the query image is shared.
struct DiagnosticQuery {
  std::string query_id;
  std::string question;
  std::vector<std::string> candidates;
  std::vector<MultiVector> candidate_text;
  std::optional<MultiVector> image;
  std::vector<std::uint32_t> features;

  /// Throws Error(kInvalidQuery): non-empty unique candidates, one text
  /// embedding each, consistent dims.
  void validate() const;
};

/// {query_id, question, candidates: [{label, text: rows}], image?: rows, features?}
DiagnosticQuery parse_diagnostic_query(std::string_view json_text);

struct EvidenceEntry {
  std::string candidate;
  std::string page_id;
  std::string book_id;
  std::int64_t page_number = 0;
  Partition partition{};
  double score = 0.0;
  std::optional<FusionBreakdown> breakdown;
  std::uint32_t turns = 0;
  bool sufficient = false;
  std::string summary;
};

struct EvidenceBundle {
  std::vector<EvidenceEntry> entries;  // candidate input order
  bool no_retrieval = false;
};

struct EvidencePrompt {
  std::string query_id;
  std::string question;
  std::vector<EvidenceEntry> evidence;
  std::string instructions;
  bool no_retrieval = false;
  std::string text;  // rendered template
};

/// What a summarizer sees about one retrieved page.
struct PageEvidence {
  std::string candidate;
  std::string page_id;
  std::string book_id;
  std::int64_t page_number = 0;
  Partition partition{};
  double score = 0.0;
};

class SummarizerPort {
 public:
  virtual ~SummarizerPort() = default;
  virtual std::string summarize(const PageEvidence& page, std::string_view question) const = 0;
};

class DiagnosticModelPort {
 public:
  virtual ~DiagnosticModelPort() = default;
  virtual std::string answer(const EvidencePrompt& prompt) const = 0;
};

/// Deterministic stand-in: a one-line description of the page.
class EchoSummarizer final : public SummarizerPort {
 public:
  std::string summarize(const PageEvidence& page, std::string_view question) const override;
};

/// Deterministic stand-in: answers with the candidate holding the highest
/// evidence score (first in input order on ties).
class TopEvidenceModel final : public DiagnosticModelPort {
 public:
  std::string answer(const EvidencePrompt& prompt) const override;
};

const std::string& default_prompt_template();
const std::string& default_instructions();

struct PipelineConfig {
  RetrievalOptions retrieval;  // k2 is forced to 1 per candidate
  /// Evidence is sufficient once its fusion score reaches the threshold.
  /// Unset accepts the first turn.
  std::optional<double> sufficiency_threshold;
  std::uint32_t max_turns = 3;
  std::string prompt_template = default_prompt_template();
  std::string instructions = default_instructions();
};

/// Placeholders: {{query_id}} {{question}} {{candidates}} {{evidence}}
/// {{instructions}}; {{#context}}...{{/context}} renders only when evidence
/// exists. Unknown or missing required placeholders and unbalanced blocks
/// throw Error(kTemplate).
EvidencePrompt assemble_prompt(const DiagnosticQuery& query, const EvidenceBundle& bundle,
                               std::string_view template_text, const std::string& instructions);

DecisionPath route(const DiagnosticQuery& query, const DecisionPath& fixed);
/// Greedy decode; features come from the query or its hashed question.
DecisionPath route(const DiagnosticQuery& query, const RoutingPolicy& policy);

struct TraceTurn {
  std::size_t candidate_index = 0;
  std::string candidate;
  std::uint32_t turn = 0;  // 1-based
  std::size_t k1 = 0;
  std::size_t pool = 0;
  std::vector<RankedEntry> stage1;
  RankedEntry top;
  bool sufficient = false;
  std::string summary;
};

struct DiagnosticResult {
  DecisionPath path;
  std::vector<std::string> candidates;
  EvidenceBundle bundle;
  EvidencePrompt prompt;
  std::vector<TraceTurn> trace;  // (candidate index, turn) order
  std::optional<std::string> answer;

  std::string trace_json() const;
};

/// Runs the workflow for a routed path. No-rag paths skip retrieval; a
/// classifier path restricts every retrieval to its partition. Turn t
/// widens stage 1 to t * k1 pages and keeps the best evidence seen so far.
/// Throws Error(kRetrievalUnavailable) when a candidate finds no page.
DiagnosticResult run_diagnostic(const DiagnosticQuery& query, const DecisionPath& path,
                                const Corpus& corpus, const HnswIndex& index,
                                const PipelineConfig& config,
                                const SummarizerPort* summarizer = nullptr,
                                const DiagnosticModelPort* model = nullptr);

}  // namespace fuserank
