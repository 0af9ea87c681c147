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

#include "fuserank/pipeline.hpp"

#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fuserank/error.hpp"
#include "json_util.hpp"

namespace fuserank {

using nlohmann::json;

void DiagnosticQuery::validate() const {
  auto bad = [this](const std::string& what) {
    throw Error(ErrorCode::kInvalidQuery, "diagnostic query " + query_id + ": " + what);
  };
  if (candidates.empty()) bad("needs at least one candidate");
  if (std::set<std::string>(candidates.begin(), candidates.end()).size() != candidates.size()) {
    bad("candidate labels must be unique");
  }
  if (candidate_text.size() != candidates.size()) bad("one text embedding per candidate is required");
  const std::size_t dim = candidate_text.front().dim();
  for (const auto& t : candidate_text) {
    if (t.dim() != dim) bad("candidate embeddings disagree on dim");
  }
  if (image && image->dim() != dim) bad("image dim differs from text dim");
}

DiagnosticQuery parse_diagnostic_query(std::string_view json_text) {
  const json doc = json_util::parse(json_text, ErrorCode::kFormat, "diagnostic query");
  if (!doc.is_object()) throw Error(ErrorCode::kFormat, "diagnostic query must be an object");
  DiagnosticQuery q;
  q.query_id = json_util::require<std::string>(doc, "query_id", "diagnostic query");
  q.question = doc.value("question", std::string());
  const auto cands = doc.find("candidates");
  if (cands == doc.end() || !cands->is_array()) {
    throw Error(ErrorCode::kFormat, "diagnostic query needs a candidates array");
  }
  for (const auto& c : *cands) {
    if (!c.is_object()) throw Error(ErrorCode::kFormat, "candidate must be an object");
    q.candidates.push_back(json_util::require<std::string>(c, "label", "candidate"));
    if (!c.contains("text")) throw Error(ErrorCode::kFormat, "candidate needs text rows");
    q.candidate_text.push_back(json_util::multivector_from(c["text"], "candidate text"));
  }
  if (doc.contains("image") && !doc["image"].is_null()) {
    q.image = json_util::multivector_from(doc["image"], "query image");
  }
  if (doc.contains("features")) {
    q.features = json_util::require<std::vector<std::uint32_t>>(doc, "features", "diagnostic query");
  }
  q.validate();
  return q;
}

namespace {

std::string format_score(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

std::string page_line(const EvidenceEntry& e) {
  return "page " + e.page_id + " (book " + e.book_id + ", page " + std::to_string(e.page_number) + ", " +
         std::string(partition_name(e.partition)) + "), fusion score " + format_score(e.score);
}

std::string render_evidence(const EvidenceBundle& bundle) {
  std::string out;
  for (std::size_t i = 0; i < bundle.entries.size(); ++i) {
    const auto& e = bundle.entries[i];
    out += "[" + std::to_string(i + 1) + "] " + e.candidate + ": " + page_line(e) + "\n";
    if (!e.summary.empty()) out += "    " + e.summary + "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Minimal template engine over {{name}} and one {{#context}} block.
std::string render(std::string_view tpl, const std::map<std::string, std::string>& vars, bool context) {
  std::string out;
  bool in_block = false;
  bool seen_block = false;
  std::set<std::string> used;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find("{{", pos);
    const auto chunk = tpl.substr(pos, open == std::string_view::npos ? std::string_view::npos : open - pos);
    if (!in_block || context) out += chunk;
    if (open == std::string_view::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error(ErrorCode::kTemplate, "unterminated placeholder");
    const std::string name(tpl.substr(open + 2, close - open - 2));
    pos = close + 2;
    if (name == "#context") {
      if (in_block || seen_block) throw Error(ErrorCode::kTemplate, "nested or repeated context block");
      in_block = seen_block = true;
      // Swallow the line break after the opening tag so an omitted block leaves no gap.
      if (pos < tpl.size() && tpl[pos] == '\n') ++pos;
      continue;
    }
    if (name == "/context") {
      if (!in_block) throw Error(ErrorCode::kTemplate, "context block closed without opening");
      in_block = false;
      if (pos < tpl.size() && tpl[pos] == '\n') ++pos;
      continue;
    }
    auto it = vars.find(name);
    if (it == vars.end()) throw Error(ErrorCode::kTemplate, "unknown placeholder {{" + name + "}}");
    used.insert(name);
    if (!in_block || context) out += it->second;
  }
  if (in_block) throw Error(ErrorCode::kTemplate, "context block is not closed");
  for (const char* required : {"question", "evidence", "instructions"}) {
    if (!used.count(required)) {
      throw Error(ErrorCode::kTemplate, std::string("template lacks {{") + required + "}}");
    }
  }
  return out;
}

json entry_json(const EvidenceEntry& e) {
  json j = {{"candidate", e.candidate},
            {"page_id", e.page_id},
            {"book_id", e.book_id},
            {"page_number", e.page_number},
            {"partition", std::string(partition_name(e.partition))},
            {"score", e.score},
            {"turns", e.turns},
            {"sufficient", e.sufficient},
            {"summary", e.summary}};
  if (e.breakdown) j["breakdown"] = json_util::breakdown_to(*e.breakdown);
  return j;
}

}  // namespace

std::string EchoSummarizer::summarize(const PageEvidence& page, std::string_view question) const {
  (void)question;
  return "summary: " + page.candidate + " is supported by " + page.page_id + " from " +
         std::string(partition_name(page.partition)) + " (score " + format_score(page.score) + ")";
}

std::string TopEvidenceModel::answer(const EvidencePrompt& prompt) const {
  if (prompt.evidence.empty()) return "<think>no evidence retrieved</think><answer>undetermined</answer>";
  const EvidenceEntry* best = &prompt.evidence.front();
  for (const auto& e : prompt.evidence) {
    if (e.score > best->score) best = &e;
  }
  return "<think>" + best->candidate + " has the strongest evidence (" + best->page_id +
         ")</think><answer>" + best->candidate + "</answer>";
}

const std::string& default_prompt_template() {
  static const std::string tpl =
      "Work through the case below. Put your reasoning between <think> and </think>, then give the\n"
      "single best diagnosis between <answer> and </answer>.\n"
      "\n"
      "Question: {{question}}\n"
      "Candidates: {{candidates}}\n"
      "{{#context}}\n"
      "\n"
      "Context:\n"
      "{{evidence}}\n"
      "{{/context}}\n"
      "\n"
      "{{instructions}}\n";
  return tpl;
}

const std::string& default_instructions() {
  static const std::string text =
      "Weigh the evidence listed for each candidate against the question and against each other. "
      "State which evidence separates the chosen diagnosis from the runner-up.";
  return text;
}

EvidencePrompt assemble_prompt(const DiagnosticQuery& query, const EvidenceBundle& bundle,
                               std::string_view template_text, const std::string& instructions) {
  if (!bundle.no_retrieval && bundle.entries.size() != query.candidates.size()) {
    throw Error(ErrorCode::kInvalidArgument, "evidence bundle does not cover every candidate");
  }
  EvidencePrompt p;
  p.query_id = query.query_id;
  p.question = query.question;
  p.evidence = bundle.entries;
  p.instructions = instructions;
  p.no_retrieval = bundle.no_retrieval;
  const std::map<std::string, std::string> vars = {{"query_id", query.query_id},
                                                   {"question", query.question},
                                                   {"candidates", join(query.candidates, ", ")},
                                                   {"evidence", render_evidence(bundle)},
                                                   {"instructions", instructions}};
  p.text = render(template_text, vars, !bundle.entries.empty());
  return p;
}

DecisionPath route(const DiagnosticQuery& query, const DecisionPath& fixed) {
  (void)query;
  fixed.validate();
  return fixed;
}

DecisionPath route(const DiagnosticQuery& query, const RoutingPolicy& policy) {
  RoutedQuery rq;
  rq.query_id = query.query_id;
  rq.text = query.question;
  rq.features = query.features;
  return policy.greedy(policy.features_for(rq));
}

DiagnosticResult run_diagnostic(const DiagnosticQuery& query, const DecisionPath& path,
                                const Corpus& corpus, const HnswIndex& index,
                                const PipelineConfig& config, const SummarizerPort* summarizer,
                                const DiagnosticModelPort* model) {
  query.validate();
  path.validate();
  if (config.max_turns == 0) throw Error(ErrorCode::kInvalidArgument, "max_turns must be >= 1");

  DiagnosticResult result;
  result.path = path;
  result.candidates = query.candidates;
  if (!path.rag) {
    result.bundle.no_retrieval = true;
  } else {
    RetrievalOptions base = config.retrieval;
    base.k2 = 1;
    if (*path.classifier) base.partition = path.partition;
    const std::size_t base_pool = base.effective_pool();

    for (std::size_t ci = 0; ci < query.candidates.size(); ++ci) {
      QueryBundle sub;
      sub.text = query.candidate_text[ci];
      sub.image = query.image;
      std::optional<RankedEntry> best;
      EvidenceEntry entry;
      entry.candidate = query.candidates[ci];
      for (std::uint32_t turn = 1; turn <= config.max_turns; ++turn) {
        RetrievalOptions opts = base;
        opts.k1 = base.k1 * turn;
        opts.pool_size = base_pool * turn;
        TraceTurn t;
        t.candidate_index = ci;
        t.candidate = entry.candidate;
        t.turn = turn;
        t.k1 = opts.k1;
        t.pool = *opts.pool_size;
        const auto ranked = retrieve_then_rerank(corpus, index, sub, opts, &t.stage1);
        if (ranked.entries.empty()) {
          throw Error(ErrorCode::kRetrievalUnavailable,
                      "no page retrieved for candidate " + entry.candidate);
        }
        t.top = ranked.entries.front();
        if (!best || ranks_before(t.top.score, t.top.page_id, best->score, best->page_id)) best = t.top;
        t.sufficient = !config.sufficiency_threshold || best->score >= *config.sufficiency_threshold;
        if (summarizer) {
          const auto& meta = corpus.at(best->page_id).meta;
          t.summary = summarizer->summarize(
              {entry.candidate, best->page_id, meta.book_id, meta.page_number, meta.partition, best->score},
              query.question);
        }
        entry.turns = turn;
        entry.sufficient = t.sufficient;
        entry.summary = t.summary;
        const bool done = t.sufficient;
        result.trace.push_back(std::move(t));
        if (done) break;
      }
      const auto& meta = corpus.at(best->page_id).meta;
      entry.page_id = best->page_id;
      entry.book_id = meta.book_id;
      entry.page_number = meta.page_number;
      entry.partition = meta.partition;
      entry.score = best->score;
      entry.breakdown = best->breakdown;
      result.bundle.entries.push_back(std::move(entry));
    }
  }
  result.prompt = assemble_prompt(query, result.bundle, config.prompt_template, config.instructions);
  if (model) result.answer = model->answer(result.prompt);
  return result;
}

std::string DiagnosticResult::trace_json() const {
  json turns = json::array();
  for (const auto& t : trace) {
    json stage1 = json::array();
    for (const auto& e : t.stage1) stage1.push_back({{"page_id", e.page_id}, {"score", e.score}});
    turns.push_back({{"candidate_index", t.candidate_index},
                     {"candidate", t.candidate},
                     {"turn", t.turn},
                     {"k1", t.k1},
                     {"pool", t.pool},
                     {"stage1", std::move(stage1)},
                     {"top", json_util::entry_to(t.top)},
                     {"sufficient", t.sufficient},
                     {"summary", t.summary}});
  }
  json evidence = json::array();
  for (const auto& e : bundle.entries) evidence.push_back(entry_json(e));
  json doc = {{"query", {{"query_id", prompt.query_id}, {"question", prompt.question}, {"candidates", candidates}}},
              {"path", path_to_value(path)},
              {"no_retrieval", bundle.no_retrieval},
              {"turns", std::move(turns)},
              {"evidence", std::move(evidence)},
              {"prompt", prompt.text}};
  doc["answer"] = answer ? json(*answer) : json(nullptr);
  return doc.dump(2);
}

}  // namespace fuserank
