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

// fuserank command-line tool. Talks to the library through the C API only.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuserank/fuserank.h"

namespace {

using nlohmann::json;

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitInputFormat = 2, kExitNotFound = 3, kExitComputation = 4 };

// Failure carrying the process exit code and a structured description.
struct CliFailure {
  int exit_code;
  std::string code;
  std::string category;
  std::string message;
};

[[noreturn]] void fail_input(const std::string& message) {
  throw CliFailure{kExitInputFormat, "invalid_argument", "input-format", message};
}

// Flag combinations CLI11 cannot express.
[[noreturn]] void fail_usage(const std::string& message) {
  throw CliFailure{kExitUsage, "usage", "usage", message};
}

void check(fr_status s) {
  if (s == FR_OK) return;
  switch (fr_status_category(s)) {
    case FR_CATEGORY_NOT_FOUND:
      throw CliFailure{kExitNotFound, fr_status_name(s), "not-found", fr_last_error()};
    case FR_CATEGORY_COMPUTATION:
      throw CliFailure{kExitComputation, fr_status_name(s), "computation", fr_last_error()};
    default:
      throw CliFailure{kExitInputFormat, fr_status_name(s), "input-format", fr_last_error()};
  }
}

// Owns a char* produced by the library.
struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { fr_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
};
using CorpusHandle = Handle<fr_corpus, fr_corpus_free>;
using IndexHandle = Handle<fr_index, fr_index_free>;
using PolicyHandle = Handle<fr_policy, fr_policy_free>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitNotFound, "io", "not-found", "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliFailure{kExitNotFound, "io", "not-found", "cannot write " + path};
  out << text;
}

// Inline JSON, or @file to read it from disk.
std::string inline_or_file(const std::string& arg) {
  return !arg.empty() && arg[0] == '@' ? read_file(arg.substr(1)) : arg;
}

// ---------------------------------------------------------------- config

const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"seed", "42"},
      {"hnsw.m", "16"},
      {"hnsw.ef_construction", "200"},
      {"hnsw.ef_search", "128"},
      {"retrieval.k1", "20"},
      {"retrieval.k2", "1"},
      {"retrieval.pool_size", ""},
      {"retrieval.partition", ""},
      {"fusion.text_kurtosis_exponent", "2"},
      {"fusion.term_weight", "1"},
      {"rerank.method", "fusion"},
      {"rerank.alpha", "0.1"},
      {"eval.ks", "1,5,20"},
      {"eval.mrr_mode", "zero_on_miss"},
      {"policy.num_features", "64"},
      {"policy.rewrite_cap", "8"},
      {"policy.temperature", "1"},
      {"grpo.group_size", "8"},
      {"grpo.clip_epsilon", "0.2"},
      {"grpo.kl_coefficient", "0.04"},
      {"grpo.eta", "1e-8"},
      {"grpo.learning_rate", "0.1"},
      {"grpo.epochs", "3"},
      {"grpo.batch_queries", "8"},
      {"grpo.updates_per_batch", "1"},
      {"grpo.kl_estimator", "sampled"},
      {"grpo.optimizer", "adam"},
      {"pipeline.max_turns", "3"},
      {"pipeline.sufficiency_threshold", ""},
      {"pipeline.template", ""},
      {"pipeline.summarizer", "echo"},
      {"pipeline.model", "mock"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Config {
 public:
  Config() {
    for (const auto& [k, v] : config_defaults()) values_[k] = v;
  }

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    if (!values_.count(key)) fail_input(origin + ": unknown config key \"" + key + "\"");
    values_[key] = value;
  }

  // key = value lines; '#' starts a comment.
  void load_file(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail_input(path + ":" + std::to_string(n) + ": expected key = value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), path + ":" + std::to_string(n));
    }
    source_ = path;
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }
  bool empty(const std::string& key) const { return values_.at(key).empty(); }

  std::uint64_t u64(const std::string& key) const {
    const auto& v = str(key);
    try {
      std::size_t used = 0;
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      const auto out = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      fail_input("config " + key + " must be a non-negative integer, got \"" + v + "\"");
    }
  }

  double number(const std::string& key) const {
    const auto& v = str(key);
    try {
      std::size_t used = 0;
      const auto out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      fail_input("config " + key + " must be a number, got \"" + v + "\"");
    }
  }

  std::vector<std::size_t> list(const std::string& key) const {
    std::vector<std::size_t> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      try {
        std::size_t used = 0;
        out.push_back(std::stoul(item, &used));
        if (used != item.size() || item[0] == '-') throw std::invalid_argument("bad");
      } catch (const std::exception&) {
        fail_input("config " + key + " must be a comma list of integers");
      }
    }
    if (out.empty()) fail_input("config " + key + " is empty");
    return out;
  }

  json to_json() const {
    json out = json::object();
    for (const auto& [k, v] : values_) out[k] = v;
    return out;
  }

  std::string header_line() const {
    std::string out = "# config (" + source_ + "):";
    for (const auto& [k, v] : values_) out += " " + k + "=" + v;
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  std::string source_ = "defaults";
};

json retrieval_options(const Config& c) {
  json o = {{"k1", c.u64("retrieval.k1")},
            {"k2", c.u64("retrieval.k2")},
            {"text_kurtosis_exponent", c.number("fusion.text_kurtosis_exponent")},
            {"term_weight", c.number("fusion.term_weight")}};
  if (!c.empty("retrieval.pool_size")) o["pool_size"] = c.u64("retrieval.pool_size");
  if (!c.empty("retrieval.partition")) o["partition"] = c.str("retrieval.partition");
  return o;
}

fr_hnsw_params hnsw_params(const Config& c) {
  fr_hnsw_params p;
  fr_hnsw_params_default(&p);
  p.m = static_cast<std::uint32_t>(c.u64("hnsw.m"));
  p.ef_construction = static_cast<std::uint32_t>(c.u64("hnsw.ef_construction"));
  p.ef_search = static_cast<std::uint32_t>(c.u64("hnsw.ef_search"));
  p.seed = c.u64("seed");
  return p;
}

// ---------------------------------------------------------------- output

struct Output {
  bool json_mode = false;
  std::string command;
  const Config* config = nullptr;

  void emit(const json& result, const std::string& human) const {
    if (json_mode) {
      std::cout << json{{"command", command}, {"config", config->to_json()}, {"result", result}}.dump(2)
                << "\n";
    } else {
      std::cout << "# fuserank " << command << "\n" << config->header_line() << "\n" << human;
    }
  }
};

std::string format_double(double v, int precision = 6) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

std::string ranked_table(const json& entries) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "rank" << std::setw(28) << "page_id" << std::right << std::setw(14)
      << "score" << "\n";
  int rank = 0;
  for (const auto& e : entries) {
    out << std::left << std::setw(6) << ++rank << std::setw(28) << e["page_id"].get<std::string>()
        << std::right << std::setw(14) << format_double(e["score"].get<double>()) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- commands

struct Common {
  std::string manifest;
  std::string embeddings;
  std::string index;
  std::string query;
  std::string policy;
  std::string path;
};

void load_corpus(const Common& a, CorpusHandle& corpus) {
  check(fr_corpus_ingest(a.manifest.c_str(), a.embeddings.empty() ? nullptr : a.embeddings.c_str(), &corpus.p));
}

void load_index(const Common& a, const Config& c, IndexHandle& index) {
  check(fr_index_load(a.index.c_str(), &index.p));
  check(fr_index_set_ef_search(index.p, static_cast<std::uint32_t>(c.u64("hnsw.ef_search"))));
}

int cmd_ingest(const Common& a, const Config& c, const Output& out, const std::string& out_manifest,
               const std::string& out_embeddings) {
  CorpusHandle corpus;
  load_corpus(a, corpus);
  if (!out_manifest.empty()) {
    if (out_embeddings.empty()) fail_usage("--out-manifest needs --out-embeddings");
    check(fr_corpus_save(corpus.p, out_manifest.c_str(), out_embeddings.c_str()));
  }
  OwnedString info;
  check(fr_corpus_info_json(corpus.p, info.out()));
  const json manifest = json::parse(info.str());
  std::map<std::string, std::size_t> per_partition;
  for (const auto& p : manifest["pages"]) per_partition[p["partition"].get<std::string>()]++;
  json result = {{"pages", fr_corpus_size(corpus.p)},
                 {"dim", fr_corpus_dim(corpus.p)},
                 {"partitions", per_partition}};
  if (!out_manifest.empty()) result["written"] = {{"manifest", out_manifest}, {"embeddings", out_embeddings}};
  std::ostringstream h;
  h << "pages: " << fr_corpus_size(corpus.p) << "\ndim: " << fr_corpus_dim(corpus.p) << "\n";
  for (const auto& [name, n] : per_partition) h << "  " << std::left << std::setw(70) << name << n << "\n";
  if (!out_manifest.empty()) h << "wrote " << out_manifest << " and " << out_embeddings << "\n";
  (void)c;
  out.emit(result, h.str());
  return kExitOk;
}

int cmd_index(const Common& a, const Config& c, const Output& out, const std::string& index_out) {
  CorpusHandle corpus;
  load_corpus(a, corpus);
  IndexHandle index;
  const auto params = hnsw_params(c);
  check(fr_index_build(corpus.p, &params, &index.p));
  check(fr_index_save(index.p, index_out.c_str()));
  const json result = {{"pages", fr_index_size(index.p)}, {"index", index_out}};
  out.emit(result, "indexed " + std::to_string(fr_index_size(index.p)) + " pages into " + index_out + "\n");
  return kExitOk;
}

int cmd_search(const Common& a, const Config& c, const Output& out, bool ann_only) {
  const std::string partition = c.str("retrieval.partition");
  IndexHandle index;
  load_index(a, c, index);
  const std::string query = read_file(a.query);
  OwnedString res;
  if (ann_only) {
    check(fr_index_search_json(index.p, query.c_str(), c.u64("retrieval.k1"),
                               partition.empty() ? nullptr : partition.c_str(), res.out()));
    const json result = json::parse(res.str());
    out.emit(result, ranked_table(result));
    return kExitOk;
  }
  CorpusHandle corpus;
  load_corpus(a, corpus);
  const std::string opts = retrieval_options(c).dump();
  check(fr_retrieve_json(corpus.p, index.p, query.c_str(), opts.c_str(), res.out()));
  const json result = json::parse(res.str());
  std::string human = ranked_table(result["entries"]);
  if (result["maxsim_fallback"].get<bool>()) human += "note: single-modality query, ranked by MaxSim\n";
  out.emit(result, human);
  return kExitOk;
}

int cmd_rerank(const Common& a, const Config& c, const Output& out, const std::string& candidates) {
  CorpusHandle corpus;
  load_corpus(a, corpus);
  json ids = json::array();
  std::stringstream ss(candidates);
  std::string id;
  while (std::getline(ss, id, ',')) {
    id = trim(id);
    if (!id.empty()) ids.push_back(id);
  }
  if (ids.empty()) fail_input("--candidates lists no page ids");
  json opts = {{"method", c.str("rerank.method")},
               {"alpha", c.number("rerank.alpha")},
               {"text_kurtosis_exponent", c.number("fusion.text_kurtosis_exponent")},
               {"term_weight", c.number("fusion.term_weight")}};
  const std::string query = read_file(a.query);
  OwnedString res;
  check(fr_rerank_json(corpus.p, query.c_str(), ids.dump().c_str(), opts.dump().c_str(), res.out()));
  const json result = json::parse(res.str());
  out.emit(result, ranked_table(result["entries"]));
  return kExitOk;
}

int cmd_eval(const Common& a, const Config& c, const Output& out, const std::string& run,
             const std::string& qrels) {
  const auto ks = c.list("eval.ks");
  const auto& mode = c.str("eval.mrr_mode");
  if (mode != "zero_on_miss" && mode != "printed_min_form") {
    fail_input("eval.mrr_mode must be zero_on_miss or printed_min_form");
  }
  OwnedString js, table;
  check(fr_evaluate_files(run.c_str(), qrels.c_str(), a.manifest.c_str(), ks.data(), ks.size(),
                          mode == "printed_min_form" ? 1 : 0, js.out(), table.out()));
  out.emit(json::parse(js.str()), table.str());
  return kExitOk;
}

int cmd_reward(const Config& c, const Output& out, const std::string& path, const std::string& truth) {
  (void)c;
  OwnedString res;
  check(fr_reward_json(inline_or_file(path).c_str(), inline_or_file(truth).c_str(), res.out()));
  const json result = json::parse(res.str());
  std::string decisions;
  for (const auto& d : result["decisions"]) decisions += (decisions.empty() ? "" : " ") + d.get<std::string>();
  out.emit(result, std::to_string(result["reward"].get<int>()) + "\ndecisions: " + decisions + "\n");
  return kExitOk;
}

json grpo_options(const Config& c) {
  return {{"group_size", c.u64("grpo.group_size")},
          {"clip_epsilon", c.number("grpo.clip_epsilon")},
          {"kl_coefficient", c.number("grpo.kl_coefficient")},
          {"eta", c.number("grpo.eta")},
          {"learning_rate", c.number("grpo.learning_rate")},
          {"epochs", c.u64("grpo.epochs")},
          {"batch_queries", c.u64("grpo.batch_queries")},
          {"updates_per_batch", c.u64("grpo.updates_per_batch")},
          {"kl_estimator", c.str("grpo.kl_estimator")},
          {"optimizer", c.str("grpo.optimizer")},
          {"seed", c.u64("seed")}};
}

int cmd_grpo_train(const Common& a, const Config& c, const Output& out, const std::string& dataset,
                   const std::string& policy_out, const std::string& curve_out) {
  PolicyHandle policy;
  if (!a.policy.empty()) {
    check(fr_policy_load(a.policy.c_str(), &policy.p));
  } else {
    check(fr_policy_create(static_cast<std::uint32_t>(c.u64("policy.num_features")),
                           static_cast<std::uint32_t>(c.u64("policy.rewrite_cap")),
                           c.number("policy.temperature"), &policy.p));
  }
  OwnedString curve, summary;
  check(fr_grpo_train_file(policy.p, dataset.c_str(), grpo_options(c).dump().c_str(), curve.out(),
                           summary.out()));
  check(fr_policy_save(policy.p, policy_out.c_str()));
  if (!curve_out.empty()) write_file(curve_out, curve.str());
  json result = json::parse(summary.str());
  result["policy"] = policy_out;
  if (!curve_out.empty()) result["curve"] = curve_out;
  std::ostringstream h;
  h << "queries: " << result["queries"] << "\nsteps: " << result["steps"] << "\n";
  int e = 0;
  for (const auto& r : result["epoch_mean_reward"]) {
    h << "epoch " << ++e << " mean group reward: " << format_double(r.get<double>(), 4) << "\n";
  }
  h << "expected reward: " << format_double(result["expected_reward_before"].get<double>(), 4) << " -> "
    << format_double(result["expected_reward_after"].get<double>(), 4) << "\n";
  h << "policy written to " << policy_out << "\n";
  out.emit(result, h.str());
  return kExitOk;
}

void require_one_router(const Common& a) {
  if (a.policy.empty() == a.path.empty()) fail_usage("pass exactly one of --policy and --path");
}

int cmd_route(const Common& a, const Config& c, const Output& out) {
  (void)c;
  require_one_router(a);
  PolicyHandle policy;
  if (!a.policy.empty()) check(fr_policy_load(a.policy.c_str(), &policy.p));
  const std::string fixed = a.path.empty() ? std::string() : inline_or_file(a.path);
  OwnedString res;
  check(fr_route_json(policy.p, a.path.empty() ? nullptr : fixed.c_str(), read_file(a.query).c_str(),
                      res.out()));
  const json result = json::parse(res.str());
  out.emit(result, result.dump() + "\n");
  return kExitOk;
}

int cmd_diagnose(const Common& a, const Config& c, const Output& out, const std::string& trace_out) {
  require_one_router(a);
  CorpusHandle corpus;
  load_corpus(a, corpus);
  IndexHandle index;
  load_index(a, c, index);
  PolicyHandle policy;
  if (!a.policy.empty()) check(fr_policy_load(a.policy.c_str(), &policy.p));
  json opts = retrieval_options(c);
  opts["max_turns"] = c.u64("pipeline.max_turns");
  if (!c.empty("pipeline.sufficiency_threshold")) {
    opts["sufficiency_threshold"] = c.number("pipeline.sufficiency_threshold");
  }
  if (!c.empty("pipeline.template")) opts["template"] = read_file(c.str("pipeline.template"));
  opts["summarizer"] = c.str("pipeline.summarizer");
  opts["model"] = c.str("pipeline.model");
  const std::string fixed = a.path.empty() ? std::string() : inline_or_file(a.path);
  OwnedString res;
  check(fr_diagnose_json(corpus.p, index.p, policy.p, a.path.empty() ? nullptr : fixed.c_str(),
                         read_file(a.query).c_str(), opts.dump().c_str(), res.out()));
  if (!trace_out.empty()) write_file(trace_out, res.str() + "\n");
  const json result = json::parse(res.str());
  std::ostringstream h;
  h << "path: " << result["path"].dump() << "\n";
  if (result["no_retrieval"].get<bool>()) h << "no retrieval performed\n";
  for (const auto& e : result["evidence"]) {
    h << "evidence " << e["candidate"].get<std::string>() << ": " << e["page_id"].get<std::string>() << " ("
      << e["partition"].get<std::string>() << ") score " << format_double(e["score"].get<double>())
      << " turns " << e["turns"] << "\n";
  }
  h << "\n" << result["prompt"].get<std::string>();
  if (!result["answer"].is_null()) h << "\nanswer: " << result["answer"].get<std::string>() << "\n";
  out.emit(result, h.str());
  return kExitOk;
}

void print_failure(const CliFailure& f, bool json_mode) {
  const json err = {{"error", {{"code", f.code}, {"category", f.category}, {"message", f.message}}}};
  if (json_mode) std::cout << err.dump(2) << "\n";
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuserank: multimodal late-interaction retrieval, fusion rerank and routing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fr_version()));

  std::string config_path;
  std::vector<std::string> sets;
  bool json_mode = false;
  std::map<std::string, std::string> flag_overrides;
  Common a;

  auto common_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file (default: $FUSERANK_CONFIG)");
    sub->add_option("--set", sets, "override a config key: key=value (repeatable)");
    sub->add_flag("--json", json_mode, "machine-readable JSON on stdout");
    sub->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { flag_overrides["seed"] = v; }, "seed");
  };
  auto override_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                           const std::string& help) {
    sub->add_option_function<std::string>(flag, [&flag_overrides, key](const std::string& v) {
      flag_overrides[key] = v;
    }, help);
  };
  auto retrieval_flags = [&](CLI::App* sub) {
    override_flag(sub, "--k1", "retrieval.k1", "stage-1 depth");
    override_flag(sub, "--k2", "retrieval.k2", "pages kept after the fusion rerank");
    override_flag(sub, "--pool-size", "retrieval.pool_size", "pooled ANN candidates before MaxSim");
    override_flag(sub, "--partition", "retrieval.partition", "restrict retrieval to one partition");
    override_flag(sub, "--ef-search", "hnsw.ef_search", "HNSW search beam width");
  };

  auto* ingest = app.add_subcommand("ingest", "validate a manifest + PGV1 corpus");
  common_flags(ingest);
  std::string out_manifest, out_embeddings;
  ingest->add_option("--manifest", a.manifest, "manifest JSON")->required();
  ingest->add_option("--embeddings", a.embeddings, "PGV1 file (default: from manifest)");
  ingest->add_option("--out-manifest", out_manifest, "re-serialize the corpus to this manifest");
  ingest->add_option("--out-embeddings", out_embeddings, "PGV1 output for --out-manifest");

  auto* index = app.add_subcommand("index", "build and save an HNSW index");
  common_flags(index);
  std::string index_out;
  index->add_option("--manifest", a.manifest, "manifest JSON")->required();
  index->add_option("--embeddings", a.embeddings, "PGV1 file");
  index->add_option("--out", index_out, "index file to write")->required();
  override_flag(index, "--M", "hnsw.m", "graph degree");
  override_flag(index, "--ef-construction", "hnsw.ef_construction", "build beam width");

  auto* search = app.add_subcommand("search", "two-stage retrieve then fusion rerank");
  common_flags(search);
  bool ann_only = false;
  search->add_option("--manifest", a.manifest, "manifest JSON")->required();
  search->add_option("--embeddings", a.embeddings, "PGV1 file");
  search->add_option("--index", a.index, "index file")->required();
  search->add_option("--query", a.query, "query bundle JSON")->required();
  search->add_flag("--ann-only", ann_only, "return raw pooled ANN results (k = k1)");
  retrieval_flags(search);

  auto* rerank = app.add_subcommand("rerank", "score given corpus pages against a query");
  common_flags(rerank);
  std::string candidates;
  rerank->add_option("--manifest", a.manifest, "manifest JSON")->required();
  rerank->add_option("--embeddings", a.embeddings, "PGV1 file");
  rerank->add_option("--query", a.query, "query bundle JSON")->required();
  rerank->add_option("--candidates", candidates, "comma-separated page ids")->required();
  override_flag(rerank, "--method", "rerank.method", "fusion | maxsim | weimocir");
  override_flag(rerank, "--alpha", "rerank.alpha", "weimocir text weight");

  auto* eval = app.add_subcommand("eval", "Recall/MRR/NDCG of a run against qrels");
  common_flags(eval);
  std::string run, qrels;
  eval->add_option("--run", run, "run JSONL")->required();
  eval->add_option("--qrels", qrels, "qrels JSONL")->required();
  eval->add_option("--manifest", a.manifest, "manifest JSON (neighbour relevance)")->required();
  override_flag(eval, "--ks", "eval.ks", "comma list of cutoffs");
  override_flag(eval, "--mrr-mode", "eval.mrr_mode", "zero_on_miss | printed_min_form");

  auto* reward = app.add_subcommand("reward", "hierarchical reward of a path against ground truth");
  common_flags(reward);
  std::string truth;
  reward->add_option("--path", a.path, "path JSON or @file")->required();
  reward->add_option("--truth", truth, "ground-truth path JSON or @file")->required();

  auto* grpo = app.add_subcommand("grpo-train", "train the routing policy with GRPO");
  common_flags(grpo);
  std::string dataset, policy_out, curve_out;
  grpo->add_option("--dataset", dataset, "routed-query JSONL")->required();
  grpo->add_option("--policy", a.policy, "initial policy (default: fresh uniform policy)");
  grpo->add_option("--policy-out", policy_out, "trained policy output")->required();
  grpo->add_option("--curve", curve_out, "learning-curve CSV output");
  override_flag(grpo, "--epochs", "grpo.epochs", "training epochs");
  override_flag(grpo, "--learning-rate", "grpo.learning_rate", "step size");
  override_flag(grpo, "--group-size", "grpo.group_size", "samples per query");
  override_flag(grpo, "--beta", "grpo.kl_coefficient", "KL coefficient");

  auto* route = app.add_subcommand("route", "decode a decision path for a query");
  common_flags(route);
  route->add_option("--query", a.query, "query JSON")->required();
  route->add_option("--policy", a.policy, "trained policy");
  route->add_option("--path", a.path, "fixed path JSON or @file");

  auto* diagnose = app.add_subcommand("diagnose", "run the diagnostic workflow and print the prompt");
  common_flags(diagnose);
  std::string trace_out;
  diagnose->add_option("--manifest", a.manifest, "manifest JSON")->required();
  diagnose->add_option("--embeddings", a.embeddings, "PGV1 file");
  diagnose->add_option("--index", a.index, "index file")->required();
  diagnose->add_option("--query", a.query, "diagnostic query JSON")->required();
  diagnose->add_option("--policy", a.policy, "trained policy");
  diagnose->add_option("--path", a.path, "fixed path JSON or @file");
  diagnose->add_option("--trace-out", trace_out, "write the trace JSON here");
  override_flag(diagnose, "--max-turns", "pipeline.max_turns", "retrieval turn cap");
  override_flag(diagnose, "--threshold", "pipeline.sufficiency_threshold", "sufficiency threshold");
  retrieval_flags(diagnose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Config config;
    if (config_path.empty()) {
      if (const char* env = std::getenv("FUSERANK_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) config.load_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail_input("--set expects key=value, got \"" + s + "\"");
      config.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)), "--set");
    }
    for (const auto& [k, v] : flag_overrides) config.set(k, v, "flag");

    const Output out{json_mode, sub->get_name(), &config};
    const std::string name = sub->get_name();
    if (name == "ingest") return cmd_ingest(a, config, out, out_manifest, out_embeddings);
    if (name == "index") return cmd_index(a, config, out, index_out);
    if (name == "search") return cmd_search(a, config, out, ann_only);
    if (name == "rerank") return cmd_rerank(a, config, out, candidates);
    if (name == "eval") return cmd_eval(a, config, out, run, qrels);
    if (name == "reward") return cmd_reward(config, out, a.path, truth);
    if (name == "grpo-train") return cmd_grpo_train(a, config, out, dataset, policy_out, curve_out);
    if (name == "route") return cmd_route(a, config, out);
    if (name == "diagnose") return cmd_diagnose(a, config, out, trace_out);
    return kExitUsage;
  } catch (const CliFailure& f) {
    print_failure(f, json_mode);
    return f.exit_code;
  } catch (const json::exception& e) {
    print_failure({kExitComputation, "internal", "computation", e.what()}, json_mode);
    return kExitComputation;
  }
}
