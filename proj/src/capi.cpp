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

#include "fuserank/fuserank.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "fuserank/error.hpp"
#include "fuserank/grpo.hpp"
#include "fuserank/hnsw.hpp"
#include "fuserank/metrics.hpp"
#include "fuserank/pipeline.hpp"
#include "fuserank/router.hpp"
#include "fuserank/scoring.hpp"
#include "fuserank/store.hpp"
#include "io_util.hpp"
#include "json_util.hpp"

struct fr_corpus {
  fuserank::Corpus corpus;
};

struct fr_index {
  fuserank::HnswIndex index;
};

struct fr_policy {
  fuserank::RoutingPolicy policy;
};

namespace {

using fuserank::Error;
using fuserank::ErrorCode;
using nlohmann::json;

thread_local std::string g_last_error;

template <typename F>
fr_status guard(F&& body) {
  try {
    g_last_error.clear();
    body();
    return FR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<fr_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return FR_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

json parse_optional(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  json doc = fuserank::json_util::parse(text, ErrorCode::kFormat, what);
  if (!doc.is_object()) throw Error(ErrorCode::kFormat, std::string(what) + " must be a JSON object");
  return doc;
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kFormat, std::string("option \"") + key + "\" has the wrong type");
  }
}

fuserank::FusionParams fusion_from(const json& o) {
  fuserank::FusionParams p;
  p.text_kurtosis_exponent = get_or(o, "text_kurtosis_exponent", p.text_kurtosis_exponent);
  p.term_weight = get_or(o, "term_weight", p.term_weight);
  return p;
}

fuserank::RetrievalOptions retrieval_from(const json& o) {
  fuserank::RetrievalOptions r;
  r.k1 = get_or<std::size_t>(o, "k1", r.k1);
  r.k2 = get_or<std::size_t>(o, "k2", r.k2);
  if (o.contains("pool_size") && !o["pool_size"].is_null()) r.pool_size = get_or<std::size_t>(o, "pool_size", 0);
  if (o.contains("partition") && !o["partition"].is_null()) {
    r.partition = fuserank::require_partition(get_or<std::string>(o, "partition", ""));
  }
  r.fusion = fusion_from(o);
  return r;
}

fuserank::GrpoConfig grpo_from(const json& o) {
  fuserank::GrpoConfig c;
  c.group_size = get_or(o, "group_size", c.group_size);
  c.clip_epsilon = get_or(o, "clip_epsilon", c.clip_epsilon);
  c.kl_coefficient = get_or(o, "kl_coefficient", c.kl_coefficient);
  c.eta = get_or(o, "eta", c.eta);
  c.learning_rate = get_or(o, "learning_rate", c.learning_rate);
  c.epochs = get_or(o, "epochs", c.epochs);
  c.batch_queries = get_or(o, "batch_queries", c.batch_queries);
  c.updates_per_batch = get_or(o, "updates_per_batch", c.updates_per_batch);
  c.seed = get_or(o, "seed", c.seed);
  const auto kl = get_or<std::string>(o, "kl_estimator", "sampled");
  if (kl == "sampled") c.kl_estimator = fuserank::KlEstimator::kSampled;
  else if (kl == "exact") c.kl_estimator = fuserank::KlEstimator::kExact;
  else throw Error(ErrorCode::kInvalidArgument, "kl_estimator must be sampled or exact");
  const auto opt = get_or<std::string>(o, "optimizer", "adam");
  if (opt == "adam") c.optimizer = fuserank::OptimizerKind::kAdam;
  else if (opt == "sgd") c.optimizer = fuserank::OptimizerKind::kSgd;
  else throw Error(ErrorCode::kInvalidArgument, "optimizer must be adam or sgd");
  c.validate();
  return c;
}

fuserank::DecisionPath resolve_path(const fr_policy* policy, const char* fixed_path_json,
                                    const fuserank::DiagnosticQuery& query) {
  if ((policy == nullptr) == (fixed_path_json == nullptr)) {
    throw Error(ErrorCode::kInvalidArgument, "pass exactly one of a policy and a fixed path");
  }
  if (policy) return fuserank::route(query, policy->policy);
  return fuserank::route(query, fuserank::parse_path(fixed_path_json));
}

json ranked_to(const fuserank::RankedList& list) {
  json entries = json::array();
  for (const auto& e : list.entries) entries.push_back(fuserank::json_util::entry_to(e));
  return {{"entries", std::move(entries)}, {"maxsim_fallback", list.maxsim_fallback}};
}

}  // namespace

extern "C" {

const char* fr_version(void) { return "0.1.0"; }

const char* fr_last_error(void) { return g_last_error.c_str(); }

const char* fr_status_name(fr_status status) {
  if (status == FR_OK) return "ok";
  return fuserank::error_code_name(static_cast<ErrorCode>(status)).data();
}

fr_category fr_status_category(fr_status status) {
  if (status == FR_OK) return FR_CATEGORY_NONE;
  switch (fuserank::error_category(static_cast<ErrorCode>(status))) {
    case fuserank::ErrorCategory::kInputFormat: return FR_CATEGORY_INPUT_FORMAT;
    case fuserank::ErrorCategory::kNotFound: return FR_CATEGORY_NOT_FOUND;
    case fuserank::ErrorCategory::kComputation: return FR_CATEGORY_COMPUTATION;
  }
  return FR_CATEGORY_COMPUTATION;
}

void fr_string_free(char* s) { std::free(s); }

fr_status fr_corpus_ingest(const char* manifest_path, const char* embeddings_path, fr_corpus** out) {
  return guard([&] {
    require(manifest_path, "manifest_path");
    require(out, "out");
    *out = nullptr;
    auto corpus = fuserank::ingest(manifest_path, embeddings_path ? embeddings_path : "");
    *out = new fr_corpus{std::move(corpus)};
  });
}

fr_status fr_corpus_save(const fr_corpus* corpus, const char* manifest_path, const char* embeddings_path) {
  return guard([&] {
    require(corpus, "corpus");
    require(manifest_path, "manifest_path");
    require(embeddings_path, "embeddings_path");
    fuserank::serialize(corpus->corpus, manifest_path, embeddings_path);
  });
}

size_t fr_corpus_size(const fr_corpus* corpus) { return corpus ? corpus->corpus.size() : 0; }

size_t fr_corpus_dim(const fr_corpus* corpus) { return corpus ? corpus->corpus.dim() : 0; }

fr_status fr_corpus_info_json(const fr_corpus* corpus, char** out_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(out_json, "out_json");
    emit(out_json, fuserank::manifest_to_json(corpus->corpus.manifest()));
  });
}

fr_status fr_corpus_neighbors_json(const fr_corpus* corpus, const char* page_id, char** out_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(page_id, "page_id");
    require(out_json, "out_json");
    emit(out_json, json(corpus->corpus.neighbors(page_id)).dump());
  });
}

void fr_corpus_free(fr_corpus* corpus) { delete corpus; }

void fr_hnsw_params_default(fr_hnsw_params* params) {
  if (!params) return;
  const fuserank::HnswParams d;
  *params = {d.M, d.ef_construction, d.ef_search, d.seed};
}

fr_status fr_index_build(const fr_corpus* corpus, const fr_hnsw_params* params, fr_index** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    *out = nullptr;
    fuserank::HnswParams p;
    if (params) p = {params->m, params->ef_construction, params->ef_search, params->seed};
    *out = new fr_index{fuserank::HnswIndex::build(corpus->corpus, p)};
  });
}

fr_status fr_index_save(const fr_index* index, const char* path) {
  return guard([&] {
    require(index, "index");
    require(path, "path");
    index->index.save(path);
  });
}

fr_status fr_index_load(const char* path, fr_index** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new fr_index{fuserank::HnswIndex::load(path)};
  });
}

size_t fr_index_size(const fr_index* index) { return index ? index->index.size() : 0; }

fr_status fr_index_set_ef_search(fr_index* index, uint32_t ef_search) {
  return guard([&] {
    require(index, "index");
    if (ef_search == 0) throw Error(ErrorCode::kInvalidArgument, "ef_search must be >= 1");
    index->index.set_ef_search(ef_search);
  });
}

fr_status fr_index_search_json(const fr_index* index, const char* query_json, size_t k,
                               const char* partition, char** out_json) {
  return guard([&] {
    require(index, "index");
    require(query_json, "query_json");
    require(out_json, "out_json");
    const json doc = fuserank::json_util::parse(query_json, ErrorCode::kFormat, "search query");
    std::vector<float> vec;
    if (doc.is_array()) {
      try {
        vec = doc.get<std::vector<float>>();
      } catch (const json::exception&) {
        throw Error(ErrorCode::kFormat, "search vector must be an array of numbers");
      }
    } else {
      const auto bundle = fuserank::json_util::query_bundle_from(doc);
      if (!bundle.text) throw Error(ErrorCode::kInvalidQuery, "search needs text rows");
      vec = fuserank::column_pool(*bundle.text);
    }
    std::optional<fuserank::Partition> p;
    if (partition) p = fuserank::require_partition(partition);
    json out = json::array();
    for (const auto& c : index->index.search(vec, k, p)) {
      out.push_back({{"page_id", c.page_id}, {"score", c.score}});
    }
    emit(out_json, out.dump());
  });
}

void fr_index_free(fr_index* index) { delete index; }

fr_status fr_retrieve_json(const fr_corpus* corpus, const fr_index* index, const char* query_json,
                           const char* options_json, char** out_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(index, "index");
    require(query_json, "query_json");
    require(out_json, "out_json");
    const auto query = fuserank::json_util::query_bundle_from(
        fuserank::json_util::parse(query_json, ErrorCode::kFormat, "query"));
    const auto opts = retrieval_from(parse_optional(options_json, "options"));
    std::vector<fuserank::RankedEntry> stage1;
    const auto ranked = fuserank::retrieve_then_rerank(corpus->corpus, index->index, query, opts, &stage1);
    json doc = ranked_to(ranked);
    json s1 = json::array();
    for (const auto& e : stage1) s1.push_back({{"page_id", e.page_id}, {"score", e.score}});
    doc["stage1"] = std::move(s1);
    emit(out_json, doc.dump());
  });
}

fr_status fr_rerank_json(const fr_corpus* corpus, const char* query_json, const char* candidates_json,
                         const char* options_json, char** out_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(query_json, "query_json");
    require(candidates_json, "candidates_json");
    require(out_json, "out_json");
    const auto query = fuserank::json_util::query_bundle_from(
        fuserank::json_util::parse(query_json, ErrorCode::kFormat, "query"));
    const json ids = fuserank::json_util::parse(candidates_json, ErrorCode::kFormat, "candidates");
    if (!ids.is_array()) throw Error(ErrorCode::kFormat, "candidates must be an array of page ids");
    std::vector<fuserank::CandidateDoc> docs;
    for (const auto& id : ids) {
      if (!id.is_string()) throw Error(ErrorCode::kFormat, "candidate page ids must be strings");
      const auto& rec = corpus->corpus.at(id.get<std::string>());
      if (rec.embedding.dim() != query.dim()) {
        throw Error(ErrorCode::kDimMismatch, "query dim differs from corpus dim");
      }
      docs.push_back({rec.meta.page_id, std::cref(rec.embedding)});
    }
    const json opts = parse_optional(options_json, "options");
    const auto method = get_or<std::string>(opts, "method", "fusion");
    fuserank::RankedList list;
    if (method == "fusion") {
      list = fuserank::rerank(query, docs, fusion_from(opts));
    } else if (method == "maxsim" || method == "weimocir") {
      const double alpha = get_or(opts, "alpha", 0.1);
      for (const auto& d : docs) {
        double s = 0.0;
        if (method == "maxsim") {
          if (!query.text) throw Error(ErrorCode::kInvalidQuery, "maxsim needs text rows");
          s = fuserank::maxsim_score(*query.text, d.embedding.get());
        } else {
          s = fuserank::weimocir_score(query, d.embedding.get(), alpha);
        }
        list.entries.push_back({d.page_id, s, std::nullopt});
      }
      std::sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) {
        return fuserank::ranks_before(a.score, a.page_id, b.score, b.page_id);
      });
    } else {
      throw Error(ErrorCode::kInvalidArgument, "method must be fusion, maxsim or weimocir");
    }
    json doc = ranked_to(list);
    doc["method"] = method;
    emit(out_json, doc.dump());
  });
}

fr_status fr_evaluate_files(const char* run_path, const char* qrels_path, const char* manifest_path,
                            const size_t* ks, size_t num_ks, int printed_min_mrr, char** out_json,
                            char** out_table) {
  return guard([&] {
    require(run_path, "run_path");
    require(qrels_path, "qrels_path");
    require(manifest_path, "manifest_path");
    require(ks, "ks");
    const auto manifest = fuserank::load_manifest(manifest_path);
    const fuserank::NeighborGraph graph(manifest.pages);
    const auto run = fuserank::load_run_jsonl(run_path);
    const auto qrels = fuserank::load_qrels_jsonl(qrels_path, graph);
    const auto report = fuserank::evaluate(
        run, qrels, std::span<const std::size_t>(ks, num_ks),
        printed_min_mrr ? fuserank::MrrMode::kPrintedMinForm : fuserank::MrrMode::kZeroOnMiss);
    emit(out_json, fuserank::report_to_json(report));
    emit(out_table, fuserank::report_to_table(report, "run", fuserank::default_report_columns()));
  });
}

fr_status fr_parse_path_json(const char* path_json, char** out_canonical_json) {
  return guard([&] {
    require(path_json, "path_json");
    require(out_canonical_json, "out_canonical_json");
    emit(out_canonical_json, fuserank::path_to_json(fuserank::parse_path(path_json)));
  });
}

fr_status fr_reward_json(const char* path_json, const char* truth_json, char** out_json) {
  return guard([&] {
    require(path_json, "path_json");
    require(truth_json, "truth_json");
    require(out_json, "out_json");
    const auto path = fuserank::parse_path(path_json);
    const auto truth = fuserank::parse_path(truth_json);
    const auto r = fuserank::hierarchical_reward(path, truth);
    json decisions = json::array();
    for (auto d : r.decisions) {
      decisions.push_back(d == fuserank::DecisionOutcome::kNotApplicable ? "n/a"
                          : d == fuserank::DecisionOutcome::kCorrect     ? "correct"
                                                                         : "incorrect");
    }
    emit(out_json, json{{"reward", r.total},
                        {"decisions", std::move(decisions)},
                        {"path", fuserank::path_to_value(path)},
                        {"ground_truth", fuserank::path_to_value(truth)}}
                       .dump());
  });
}

fr_status fr_policy_create(uint32_t num_features, uint32_t rewrite_cap, double temperature, fr_policy** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    *out = new fr_policy{fuserank::RoutingPolicy(num_features, rewrite_cap, temperature)};
  });
}

fr_status fr_policy_load(const char* path, fr_policy** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new fr_policy{fuserank::RoutingPolicy::from_json(fuserank::io::read_text_file(path))};
  });
}

fr_status fr_policy_save(const fr_policy* policy, const char* path) {
  return guard([&] {
    require(policy, "policy");
    require(path, "path");
    fuserank::io::write_text_file(path, policy->policy.to_json() + "\n");
  });
}

void fr_policy_free(fr_policy* policy) { delete policy; }

fr_status fr_grpo_train_file(fr_policy* policy, const char* dataset_path, const char* config_json,
                             char** out_curve_csv, char** out_summary_json) {
  return guard([&] {
    require(policy, "policy");
    require(dataset_path, "dataset_path");
    const auto config = grpo_from(parse_optional(config_json, "grpo config"));
    const auto dataset = fuserank::load_routed_queries(dataset_path);
    auto mean_expected = [&](const fuserank::RoutingPolicy& p) {
      double total = 0.0;
      for (const auto& q : dataset) total += fuserank::expected_reward(p, q);
      return dataset.empty() ? 0.0 : total / static_cast<double>(dataset.size());
    };
    const double before = mean_expected(policy->policy);
    auto result = fuserank::train(dataset, policy->policy, config);
    const double after = mean_expected(result.policy);
    const auto queries = dataset.size();
    const auto steps = result.curve.size();
    const auto epoch_rewards = result.epoch_mean_reward;
    policy->policy = std::move(result.policy);
    emit(out_curve_csv, fuserank::curve_to_csv(result.curve));
    emit(out_summary_json, json{{"queries", queries},
                                {"steps", steps},
                                {"epoch_mean_reward", epoch_rewards},
                                {"expected_reward_before", before},
                                {"expected_reward_after", after}}
                               .dump(2));
  });
}

fr_status fr_route_json(const fr_policy* policy, const char* fixed_path_json, const char* query_json,
                        char** out_path_json) {
  return guard([&] {
    require(query_json, "query_json");
    require(out_path_json, "out_path_json");
    const json doc = fuserank::json_util::parse(query_json, ErrorCode::kFormat, "route query");
    if (!doc.is_object()) throw Error(ErrorCode::kFormat, "route query must be an object");
    fuserank::DiagnosticQuery q;
    q.query_id = get_or<std::string>(doc, "query_id", "");
    q.question = get_or<std::string>(doc, "question", get_or<std::string>(doc, "text", ""));
    q.features = get_or<std::vector<std::uint32_t>>(doc, "features", {});
    emit(out_path_json, fuserank::path_to_json(resolve_path(policy, fixed_path_json, q)));
  });
}

fr_status fr_diagnose_json(const fr_corpus* corpus, const fr_index* index, const fr_policy* policy,
                           const char* fixed_path_json, const char* query_json, const char* config_json,
                           char** out_trace_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(index, "index");
    require(query_json, "query_json");
    require(out_trace_json, "out_trace_json");
    const auto query = fuserank::parse_diagnostic_query(query_json);
    const json o = parse_optional(config_json, "diagnose config");
    fuserank::PipelineConfig config;
    config.retrieval = retrieval_from(o);
    if (o.contains("sufficiency_threshold") && !o["sufficiency_threshold"].is_null()) {
      config.sufficiency_threshold = get_or(o, "sufficiency_threshold", 0.0);
    }
    config.max_turns = get_or(o, "max_turns", config.max_turns);
    config.prompt_template = get_or(o, "template", config.prompt_template);
    config.instructions = get_or(o, "instructions", config.instructions);
    const auto summarizer_kind = get_or<std::string>(o, "summarizer", "echo");
    const auto model_kind = get_or<std::string>(o, "model", "mock");
    if (summarizer_kind != "echo" && summarizer_kind != "none") {
      throw Error(ErrorCode::kInvalidArgument, "summarizer must be echo or none");
    }
    if (model_kind != "mock" && model_kind != "none") {
      throw Error(ErrorCode::kInvalidArgument, "model must be mock or none");
    }
    const fuserank::EchoSummarizer echo;
    const fuserank::TopEvidenceModel mock;
    const auto path = resolve_path(policy, fixed_path_json, query);
    const auto result = fuserank::run_diagnostic(query, path, corpus->corpus, index->index, config,
                                                 summarizer_kind == "echo" ? &echo : nullptr,
                                                 model_kind == "mock" ? &mock : nullptr);
    emit(out_trace_json, result.trace_json());
  });
}

}  // extern "C"
