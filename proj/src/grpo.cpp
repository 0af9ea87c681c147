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

#include "fuserank/grpo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fuserank/error.hpp"
#include "json_util.hpp"

namespace fuserank {

using nlohmann::json;

namespace {

constexpr std::array<PolicyHead, 4> kHeads = {PolicyHead::kRag, PolicyHead::kRewrite,
                                              PolicyHead::kClassifier, PolicyHead::kPartition};

std::vector<double> softmax(const std::vector<double>& z, double temperature) {
  std::vector<double> p(z.size());
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - top) / temperature);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<double> log_softmax(const std::vector<double>& z, double temperature) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp((v - top) / temperature);
  const double lse = std::log(sum);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] - top) / temperature - lse;
  return out;
}

std::uint32_t draw(const std::vector<double>& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<std::uint32_t>(i);
  }
  return static_cast<std::uint32_t>(p.size() - 1);
}

std::uint32_t argmax(const std::vector<double>& p) {
  return static_cast<std::uint32_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

DecisionPath path_from_steps(const std::vector<PolicyStep>& steps) {
  if (steps[0].action == 0) return DecisionPath::no_rag();
  const auto n = steps[1].action;
  if (steps[2].action == 0) return DecisionPath::global(n);
  return DecisionPath::classified(n, all_partitions()[steps[3].action]);
}

}  // namespace

std::vector<PolicyStep> path_steps(const DecisionPath& path, std::uint32_t rewrite_cap) {
  path.validate();
  if (!path.rag) return {{PolicyHead::kRag, 0}};
  if (*path.rewrite_count > rewrite_cap) {
    throw Error(ErrorCode::kInvalidArgument, "rewrite_count exceeds the policy cap");
  }
  std::vector<PolicyStep> steps = {{PolicyHead::kRag, 1},
                                   {PolicyHead::kRewrite, *path.rewrite_count},
                                   {PolicyHead::kClassifier, *path.classifier ? 1u : 0u}};
  if (*path.classifier) {
    steps.push_back({PolicyHead::kPartition, static_cast<std::uint32_t>(partition_index(*path.partition))});
  }
  return steps;
}

std::vector<std::uint32_t> hash_features(std::string_view text, std::uint32_t num_buckets) {
  if (num_buckets == 0) throw Error(ErrorCode::kInvalidArgument, "num_buckets must be >= 1");
  std::vector<std::uint32_t> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    std::uint32_t h = 2166136261u;
    for (unsigned char c : token) {
      h ^= c;
      h *= 16777619u;
    }
    out.push_back(h % num_buckets);
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) token.push_back(static_cast<char>(std::tolower(c)));
    else flush();
  }
  flush();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RoutingPolicy::RoutingPolicy(std::uint32_t num_features, std::uint32_t rewrite_cap, double temperature)
    : num_features_(num_features), rewrite_cap_(rewrite_cap), temperature_(temperature) {
  if (num_features == 0) throw Error(ErrorCode::kInvalidArgument, "policy needs >= 1 feature");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  std::size_t total = 0;
  for (auto h : kHeads) total += head_size(h);
  params_.assign(total * num_features, 0.0);
}

std::size_t RoutingPolicy::head_size(PolicyHead head) const noexcept {
  switch (head) {
    case PolicyHead::kRag: return 2;
    case PolicyHead::kRewrite: return rewrite_cap_ + 1;
    case PolicyHead::kClassifier: return 2;
    case PolicyHead::kPartition: return kPartitionNames.size();
  }
  return 0;
}

std::size_t RoutingPolicy::head_offset(PolicyHead head) const noexcept {
  std::size_t off = 0;
  for (auto h : kHeads) {
    if (h == head) break;
    off += head_size(h) * num_features_;
  }
  return off;
}

std::size_t RoutingPolicy::param_index(PolicyHead head, std::uint32_t feature,
                                       std::uint32_t action) const noexcept {
  return head_offset(head) + static_cast<std::size_t>(feature) * head_size(head) + action;
}

std::vector<std::uint32_t> RoutingPolicy::features_for(const RoutedQuery& query) const {
  if (query.features.empty()) return hash_features(query.text, num_features_);
  for (auto f : query.features) {
    if (f >= num_features_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "query " + query.query_id + ": feature " + std::to_string(f) + " out of range");
    }
  }
  return query.features;
}

std::vector<double> RoutingPolicy::logits(PolicyHead head, std::span<const std::uint32_t> features) const {
  const std::size_t n = head_size(head);
  std::vector<double> z(n, 0.0);
  for (auto f : features) {
    const double* w = params_.data() + param_index(head, f, 0);
    for (std::size_t a = 0; a < n; ++a) z[a] += w[a];
  }
  return z;
}

std::vector<double> RoutingPolicy::probabilities(PolicyHead head,
                                                 std::span<const std::uint32_t> features) const {
  return softmax(logits(head, features), temperature_);
}

std::vector<double> RoutingPolicy::log_probabilities(PolicyHead head,
                                                     std::span<const std::uint32_t> features) const {
  return log_softmax(logits(head, features), temperature_);
}

double RoutingPolicy::path_probability(const DecisionPath& path,
                                       std::span<const std::uint32_t> features) const {
  path.validate();
  if (path.rag && *path.rewrite_count > rewrite_cap_) return 0.0;
  double p = 1.0;
  for (const auto& s : path_steps(path, rewrite_cap_)) p *= probabilities(s.head, features)[s.action];
  return p;
}

RoutingPolicy::Sample RoutingPolicy::sample(std::span<const std::uint32_t> features, Rng& rng) const {
  Sample out;
  auto take = [&](PolicyHead head) {
    const auto lp = log_probabilities(head, features);
    std::vector<double> p(lp.size());
    std::transform(lp.begin(), lp.end(), p.begin(), [](double v) { return std::exp(v); });
    const auto a = draw(p, rng);
    out.steps.push_back({head, a});
    out.log_probs.push_back(lp[a]);
    return a;
  };
  if (take(PolicyHead::kRag) == 1) {
    take(PolicyHead::kRewrite);
    if (take(PolicyHead::kClassifier) == 1) take(PolicyHead::kPartition);
  }
  out.path = path_from_steps(out.steps);
  return out;
}

DecisionPath RoutingPolicy::greedy(std::span<const std::uint32_t> features) const {
  std::vector<PolicyStep> steps;
  steps.push_back({PolicyHead::kRag, argmax(logits(PolicyHead::kRag, features))});
  if (steps[0].action == 1) {
    steps.push_back({PolicyHead::kRewrite, argmax(logits(PolicyHead::kRewrite, features))});
    steps.push_back({PolicyHead::kClassifier, argmax(logits(PolicyHead::kClassifier, features))});
    if (steps[2].action == 1) {
      steps.push_back({PolicyHead::kPartition, argmax(logits(PolicyHead::kPartition, features))});
    }
  }
  return path_from_steps(steps);
}

std::string RoutingPolicy::to_json() const {
  json doc = {{"format", "fuserank-policy"},
              {"version", 1},
              {"num_features", num_features_},
              {"rewrite_cap", rewrite_cap_},
              {"temperature", temperature_},
              {"parameters", params_}};
  return doc.dump();
}

RoutingPolicy RoutingPolicy::from_json(std::string_view text) {
  const json doc = json_util::parse(text, ErrorCode::kFormat, "policy");
  if (!doc.is_object() || doc.value("format", std::string()) != "fuserank-policy") {
    throw Error(ErrorCode::kFormat, "not a fuserank policy document");
  }
  RoutingPolicy p(json_util::require<std::uint32_t>(doc, "num_features", "policy"),
                  json_util::require<std::uint32_t>(doc, "rewrite_cap", "policy"),
                  json_util::require<double>(doc, "temperature", "policy"));
  const auto params = json_util::require<std::vector<double>>(doc, "parameters", "policy");
  if (params.size() != p.params_.size()) {
    throw Error(ErrorCode::kFormat, "policy parameter count does not match its shape");
  }
  p.params_ = params;
  return p;
}

void GrpoConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (group_size < 2) bad("group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) bad("clip_epsilon must lie in (0, 1)");
  if (!(kl_coefficient >= 0.0) || !std::isfinite(kl_coefficient)) bad("kl_coefficient must be >= 0");
  if (!(eta > 0.0)) bad("eta must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be > 0");
  if (batch_queries == 0) bad("batch_queries must be >= 1");
  if (updates_per_batch == 0) bad("updates_per_batch must be >= 1");
}

std::vector<double> group_advantages(std::span<const double> rewards, double eta) {
  if (rewards.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a group needs at least two rewards");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / (sd + eta));
  return out;
}

PolicyGroup sample_group(const RoutingPolicy& policy, const RoutedQuery& query,
                         const GrpoConfig& config, Rng& rng) {
  PolicyGroup g;
  g.query_id = query.query_id;
  g.features = policy.features_for(query);
  std::vector<double> rewards;
  for (std::uint32_t i = 0; i < config.group_size; ++i) {
    auto s = policy.sample(g.features, rng);
    PathSample ps;
    ps.path = s.path;
    ps.steps = std::move(s.steps);
    ps.old_log_probs = std::move(s.log_probs);
    ps.reward = hierarchical_reward(ps.path, query.ground_truth).total;
    rewards.push_back(ps.reward);
    g.samples.push_back(std::move(ps));
  }
  const auto adv = group_advantages(rewards, config.eta);
  for (std::size_t i = 0; i < adv.size(); ++i) g.samples[i].advantage = adv[i];
  return g;
}

ObjectiveValue grpo_objective(const RoutingPolicy& policy, std::span<const PolicyGroup> groups,
                              const RoutingPolicy& reference, const GrpoConfig& config,
                              bool with_gradient) {
  if (groups.empty()) throw Error(ErrorCode::kInvalidArgument, "no groups to evaluate");
  if (policy.parameters().size() != reference.parameters().size() ||
      policy.rewrite_cap() != reference.rewrite_cap()) {
    throw Error(ErrorCode::kInvalidArgument, "policy and reference shapes differ");
  }
  const double eps = config.clip_epsilon;
  const double beta = config.kl_coefficient;
  const double tau = policy.temperature();

  ObjectiveValue out;
  if (with_gradient) out.gradient.assign(policy.parameters().size(), 0.0);
  std::size_t steps_total = 0;
  std::size_t steps_clipped = 0;
  double kl_weighted = 0.0;

  for (const auto& g : groups) {
    if (g.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty group " + g.query_id);
    for (const auto& s : g.samples) {
      if (s.steps.empty() || s.steps.size() != s.old_log_probs.size()) {
        throw Error(ErrorCode::kInvalidArgument, "sample steps and log-probs disagree");
      }
      const double w = 1.0 / (static_cast<double>(groups.size()) * static_cast<double>(g.samples.size()) *
                              static_cast<double>(s.steps.size()));
      const double adv = s.advantage;
      for (std::size_t t = 0; t < s.steps.size(); ++t) {
        const auto [head, action] = s.steps[t];
        const auto lp = policy.log_probabilities(head, g.features);
        const auto lq = reference.log_probabilities(head, g.features);
        const double ratio = std::exp(lp[action] - s.old_log_probs[t]);
        if (!std::isfinite(ratio)) {
          throw Error(ErrorCode::kComputation, "non-finite probability ratio in group " + g.query_id);
        }
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
        const bool on_clip = clipped < unclipped;
        const double surrogate = on_clip ? clipped : unclipped;

        double kl = 0.0;
        if (config.kl_estimator == KlEstimator::kSampled) {
          const double log_r = lq[action] - lp[action];
          kl = std::exp(log_r) - log_r - 1.0;
        } else {
          for (std::size_t k = 0; k < lp.size(); ++k) kl += std::exp(lp[k]) * (lp[k] - lq[k]);
        }

        out.surrogate += w * surrogate;
        kl_weighted += w * kl;
        ++steps_total;
        if (on_clip) ++steps_clipped;

        if (!with_gradient) continue;
        const std::size_t n = lp.size();
        std::vector<double> dz(n, 0.0);
        if (!on_clip) {
          for (std::size_t k = 0; k < n; ++k) {
            const double dlogp = ((k == action ? 1.0 : 0.0) - std::exp(lp[k])) / tau;
            dz[k] += adv * ratio * dlogp;
          }
        }
        if (beta != 0.0) {
          if (config.kl_estimator == KlEstimator::kSampled) {
            const double r = std::exp(lq[action] - lp[action]);
            for (std::size_t k = 0; k < n; ++k) {
              const double dlogp = ((k == action ? 1.0 : 0.0) - std::exp(lp[k])) / tau;
              dz[k] -= beta * (1.0 - r) * dlogp;
            }
          } else {
            for (std::size_t k = 0; k < n; ++k) {
              const double pk = std::exp(lp[k]);
              dz[k] -= beta * pk * ((lp[k] - lq[k]) - kl) / tau;
            }
          }
        }
        for (auto f : g.features) {
          const std::size_t base = policy.param_index(head, f, 0);
          for (std::size_t k = 0; k < n; ++k) out.gradient[base + k] += w * dz[k];
        }
      }
    }
  }
  out.kl = kl_weighted;
  out.objective = out.surrogate - beta * kl_weighted;
  out.clip_fraction = static_cast<double>(steps_clipped) / static_cast<double>(steps_total);
  return out;
}

StepDiagnostics grpo_step(RoutingPolicy& policy, std::span<const PolicyGroup> groups,
                          const RoutingPolicy& reference, const GrpoConfig& config,
                          OptimizerState& state) {
  const auto value = grpo_objective(policy, groups, reference, config, true);
  auto params = policy.parameters();
  const auto& g = value.gradient;
  double norm = 0.0;
  for (double v : g) norm += v * v;

  if (config.optimizer == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += config.learning_rate * g[i];
  } else {
    if (state.m.size() != params.size()) {
      state.m.assign(params.size(), 0.0);
      state.v.assign(params.size(), 0.0);
      state.t = 0;
    }
    ++state.t;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
      state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = state.m[i] / c1;
      const double vhat = state.v[i] / c2;
      params[i] += config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
    }
  }
  for (double p : params) {
    if (!std::isfinite(p)) throw Error(ErrorCode::kComputation, "policy parameters diverged");
  }
  return {value.objective, value.kl, value.clip_fraction, std::sqrt(norm)};
}

TrainResult train(std::span<const RoutedQuery> dataset, const RoutingPolicy& initial,
                  const GrpoConfig& config) {
  config.validate();
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training dataset");

  TrainResult result;
  result.policy = initial;
  const RoutingPolicy reference = initial;
  OptimizerState state;
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next() % i]);
    }
    double epoch_reward = 0.0;
    std::size_t epoch_samples = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_queries) {
      const std::size_t end = std::min(order.size(), start + config.batch_queries);
      const RoutingPolicy old = result.policy;
      std::vector<PolicyGroup> groups;
      double batch_reward = 0.0;
      std::size_t batch_samples = 0;
      for (std::size_t j = start; j < end; ++j) {
        groups.push_back(sample_group(old, dataset[order[j]], config, rng));
        for (const auto& s : groups.back().samples) batch_reward += s.reward;
        batch_samples += groups.back().samples.size();
      }
      epoch_reward += batch_reward;
      epoch_samples += batch_samples;
      for (std::uint32_t u = 0; u < config.updates_per_batch; ++u) {
        const auto diag = grpo_step(result.policy, groups, reference, config, state);
        result.curve.push_back({step++, batch_reward / static_cast<double>(batch_samples), diag.kl,
                                diag.clip_fraction});
      }
    }
    result.epoch_mean_reward.push_back(epoch_reward / static_cast<double>(epoch_samples));
  }
  return result;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::ostringstream out;
  out.precision(10);
  out << "step,mean_reward,mean_kl,clip_fraction\n";
  for (const auto& c : curve) {
    out << c.step << ',' << c.mean_reward << ',' << c.mean_kl << ',' << c.clip_fraction << '\n';
  }
  return out.str();
}

double expected_reward(const RoutingPolicy& policy, const RoutedQuery& query) {
  const auto features = policy.features_for(query);
  const auto parts = all_partitions();
  double total = 0.0;
  for (const auto& path : enumerate_paths(parts, policy.rewrite_cap())) {
    total += policy.path_probability(path, features) * hierarchical_reward(path, query.ground_truth).total;
  }
  return total;
}

double path_total_variation(const RoutingPolicy& a, const RoutingPolicy& b,
                            std::span<const std::uint32_t> features) {
  if (a.rewrite_cap() != b.rewrite_cap()) {
    throw Error(ErrorCode::kInvalidArgument, "policies have different rewrite caps");
  }
  const auto parts = all_partitions();
  double tv = 0.0;
  for (const auto& path : enumerate_paths(parts, a.rewrite_cap())) {
    tv += std::abs(a.path_probability(path, features) - b.path_probability(path, features));
  }
  return 0.5 * tv;
}

}  // namespace fuserank
