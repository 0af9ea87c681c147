/*
 * Copyright 2026 The fuserank Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * Stable C interface of libfuserank.
 *
 * Every fallible call returns an fr_status; on failure fr_last_error()
 * describes the problem (thread-local, valid until the next call on the
 * same thread). Strings returned through char** out-parameters are owned
 * by the caller and released with fr_string_free. Handles are released
 * with their matching *_free function; passing NULL to a free is a no-op.
 * JSON schemas are documented in docs/FORMATS.md.
 */

#ifndef FUSERANK_FUSERANK_H_
#define FUSERANK_FUSERANK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FR_API __declspec(dllexport)
#else
#define FR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fr_status {
  FR_OK = 0,
  FR_ERR_INVALID_ARGUMENT = 1,
  FR_ERR_DIM_MISMATCH = 2,
  FR_ERR_FORMAT = 3,
  FR_ERR_CHECKSUM_MISMATCH = 4,
  FR_ERR_UNKNOWN_PARTITION = 5,
  FR_ERR_DUPLICATE_PAGE = 6,
  FR_ERR_NOT_FOUND = 7,
  FR_ERR_INVALID_QUERY = 8,
  FR_ERR_INVALID_QREL = 9,
  FR_ERR_UNDEFINED_METRIC = 10,
  FR_ERR_MISSING_RAG = 11,
  FR_ERR_PARTITION_WITHOUT_CLASSIFIER = 12,
  FR_ERR_NEGATIVE_REWRITE_COUNT = 13,
  FR_ERR_MALFORMED_PATH = 14,
  FR_ERR_TEMPLATE = 15,
  FR_ERR_RETRIEVAL_UNAVAILABLE = 16,
  FR_ERR_COMPUTATION = 17,
  FR_ERR_IO = 18,
  FR_ERR_INTERNAL = 19
} fr_status;

typedef enum fr_category {
  FR_CATEGORY_NONE = 0,
  FR_CATEGORY_INPUT_FORMAT = 1,
  FR_CATEGORY_NOT_FOUND = 2,
  FR_CATEGORY_COMPUTATION = 3
} fr_category;

typedef struct fr_corpus fr_corpus;
typedef struct fr_index fr_index;
typedef struct fr_policy fr_policy;

typedef struct fr_hnsw_params {
  uint32_t m;
  uint32_t ef_construction;
  uint32_t ef_search;
  uint64_t seed;
} fr_hnsw_params;

FR_API const char* fr_version(void);
FR_API const char* fr_last_error(void);
FR_API const char* fr_status_name(fr_status status);
FR_API fr_category fr_status_category(fr_status status);
FR_API void fr_string_free(char* s);

/* Corpus. embeddings_path may be NULL to use the manifest's embedding_file. */
FR_API fr_status fr_corpus_ingest(const char* manifest_path, const char* embeddings_path,
                                  fr_corpus** out);
FR_API fr_status fr_corpus_save(const fr_corpus* corpus, const char* manifest_path,
                                const char* embeddings_path);
FR_API size_t fr_corpus_size(const fr_corpus* corpus);
FR_API size_t fr_corpus_dim(const fr_corpus* corpus);
/* Manifest JSON of the corpus (checksum empty until saved). */
FR_API fr_status fr_corpus_info_json(const fr_corpus* corpus, char** out_json);
FR_API fr_status fr_corpus_neighbors_json(const fr_corpus* corpus, const char* page_id,
                                          char** out_json);
FR_API void fr_corpus_free(fr_corpus* corpus);

/* HNSW index. */
FR_API void fr_hnsw_params_default(fr_hnsw_params* params);
FR_API fr_status fr_index_build(const fr_corpus* corpus, const fr_hnsw_params* params,
                                fr_index** out);
FR_API fr_status fr_index_save(const fr_index* index, const char* path);
FR_API fr_status fr_index_load(const char* path, fr_index** out);
FR_API size_t fr_index_size(const fr_index* index);
FR_API fr_status fr_index_set_ef_search(fr_index* index, uint32_t ef_search);
/* query_json: a flat vector [..] or {"text": rows} (column-pooled).
 * partition may be NULL. Output: [{"page_id", "score"}, ...]. */
FR_API fr_status fr_index_search_json(const fr_index* index, const char* query_json, size_t k,
                                      const char* partition, char** out_json);
FR_API void fr_index_free(fr_index* index);

/* Two-stage retrieval. options_json may be NULL; keys: k1, k2, pool_size,
 * partition, text_kurtosis_exponent, term_weight. */
FR_API fr_status fr_retrieve_json(const fr_corpus* corpus, const fr_index* index,
                                  const char* query_json, const char* options_json,
                                  char** out_json);
/* Scores the listed corpus pages against the query. candidates_json is an
 * array of page ids; options_json keys: method ("fusion" | "maxsim" |
 * "weimocir"), alpha, text_kurtosis_exponent, term_weight. */
FR_API fr_status fr_rerank_json(const fr_corpus* corpus, const char* query_json,
                                const char* candidates_json, const char* options_json,
                                char** out_json);

/* Evaluation of a run file against qrels whose neighbour relevance comes
 * from the manifest. Either output may be NULL. */
FR_API fr_status fr_evaluate_files(const char* run_path, const char* qrels_path,
                                   const char* manifest_path, const size_t* ks, size_t num_ks,
                                   int printed_min_mrr, char** out_json, char** out_table);

/* Router. */
FR_API fr_status fr_parse_path_json(const char* path_json, char** out_canonical_json);
FR_API fr_status fr_reward_json(const char* path_json, const char* truth_json, char** out_json);

/* Routing policy and GRPO training. */
FR_API fr_status fr_policy_create(uint32_t num_features, uint32_t rewrite_cap, double temperature,
                                  fr_policy** out);
FR_API fr_status fr_policy_load(const char* path, fr_policy** out);
FR_API fr_status fr_policy_save(const fr_policy* policy, const char* path);
FR_API void fr_policy_free(fr_policy* policy);
/* Trains policy in place on a routed-query JSONL file. config_json may be
 * NULL. Either output may be NULL. */
FR_API fr_status fr_grpo_train_file(fr_policy* policy, const char* dataset_path,
                                    const char* config_json, char** out_curve_csv,
                                    char** out_summary_json);
/* Decodes a path for {query_id?, text|question, features?}. Exactly one of
 * policy and fixed_path_json must be non-NULL. */
FR_API fr_status fr_route_json(const fr_policy* policy, const char* fixed_path_json,
                               const char* query_json, char** out_path_json);

/* Diagnostic workflow; output is the trace JSON. Exactly one of policy and
 * fixed_path_json must be non-NULL. config_json keys: the retrieval keys
 * plus sufficiency_threshold, max_turns, template, instructions,
 * summarizer ("echo" | "none"), model ("mock" | "none"). */
FR_API fr_status fr_diagnose_json(const fr_corpus* corpus, const fr_index* index,
                                  const fr_policy* policy, const char* fixed_path_json,
                                  const char* query_json, const char* config_json,
                                  char** out_trace_json);

#ifdef __cplusplus
}
#endif

#endif /* FUSERANK_FUSERANK_H_ */
