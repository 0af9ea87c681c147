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
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fuserank/router.hpp"

namespace fuserank {

enum class PolicyHead : std::uint8_t { kRag = 0, kRewrite = 1, kClassifier = 2, kPartition = 3 };

/// One decision of a path: which head acted and the chosen index.
struct PolicyStep {
  PolicyHead head;
  std::uint32_t action;

  friend bool operator==(const PolicyStep&, const PolicyStep&) = default;
};

/// Decision sequence of a grammar-valid path (1, 3 or 4 steps). Throws
/// Error(kInvalidArgument) if rewrite_count exceeds the cap.
std::vector<PolicyStep> path_steps(const DecisionPath& path, std::uint32_t rewrite_cap);

/// Deterministic generator with a portable uniform draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Four factorized categorical heads (rag, rewrite count, classifier,
/// partition) whose logits are sums of per-feature weight rows over the
/// active query features. Later heads are only consulted when the
/// grammar opens them, so every sample is a valid path.
class RoutingPolicy {
 public:
  RoutingPolicy() = default;
  RoutingPolicy(std::uint32_t num_features, std::uint32_t rewrite_cap = kDefaultRewriteCap,
                double temperature = 1.0);

  std::uint32_t num_features() const noexcept { return num_features_; }
  std::uint32_t rewrite_cap() const noexcept { return rewrite_cap_; }
  double temperature() const noexcept { return temperature_; }
  std::size_t head_size(PolicyHead head) const noexcept;

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t param_index(PolicyHead head, std::uint32_t feature, std::uint32_t action) const noexcept;

  /// Explicit features when given (validated), else hashed text tokens.
  std::vector<std::uint32_t> features_for(const RoutedQuery& query) const;

  std::vector<double> logits(PolicyHead head, std::span<const std::uint32_t> features) const;
  std::vector<double> probabilities(PolicyHead head, std::span<const std::uint32_t> features) const;
  std::vector<double> log_probabilities(PolicyHead head, std::span<const std::uint32_t> features) const;

  double path_probability(const DecisionPath& path, std::span<const std::uint32_t> features) const;

  struct Sample {
    DecisionPath path;
    std::vector<PolicyStep> steps;
    std::vector<double> log_probs;
  };
  Sample sample(std::span<const std::uint32_t> features, Rng& rng) const;
  /// Argmax decode; ties pick the lowest index.
  DecisionPath greedy(std::span<const std::uint32_t> features) const;

  std::string to_json() const;
  static RoutingPolicy from_json(std::string_view text);

  friend bool operator==(const RoutingPolicy&, const RoutingPolicy&) = default;

 private:
  std::size_t head_offset(PolicyHead head) const noexcept;

  std::uint32_t num_features_ = 0;
  std::uint32_t rewrite_cap_ = kDefaultRewriteCap;
  double temperature_ = 1.0;
  std::vector<double> params_;
};

/// Lower-cased alphanumeric tokens hashed (FNV-1a) into buckets; sorted, unique.
std::vector<std::uint32_t> hash_features(std::string_view text, std::uint32_t num_buckets);

enum class KlEstimator {
  kSampled,  // per step: r - log r - 1 with r = pi_ref(a) / pi_theta(a)
  kExact,    // per step: full categorical KL(pi_theta || pi_ref) of the head
};

enum class OptimizerKind { kAdam, kSgd };

struct GrpoConfig {
  std::uint32_t group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coefficient = 0.04;
  double eta = 1e-8;
  double learning_rate = 0.1;
  std::uint32_t epochs = 3;
  std::uint32_t batch_queries = 8;
  std::uint32_t updates_per_batch = 1;
  std::uint64_t seed = 7;
  KlEstimator kl_estimator = KlEstimator::kSampled;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

struct PathSample {
  DecisionPath path;
  std::vector<PolicyStep> steps;
  std::vector<double> old_log_probs;  // per step, under the sampling policy
  double reward = 0.0;
  double advantage = 0.0;
};

struct PolicyGroup {
  std::string query_id;
  std::vector<std::uint32_t> features;
  std::vector<PathSample> samples;
};

/// (r - mean) / (std + eta) with population statistics. Needs >= 2 rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double eta);

/// Samples group_size paths for the query, rewards them against its ground
/// truth and fills in group-normalized advantages.
PolicyGroup sample_group(const RoutingPolicy& policy, const RoutedQuery& query,
                         const GrpoConfig& config, Rng& rng);

struct ObjectiveValue {
  double objective = 0.0;       // J to be maximized
  double surrogate = 0.0;       // clipped-surrogate part
  double kl = 0.0;              // averaged KL estimate (before beta)
  double clip_fraction = 0.0;   // share of steps on the clipped branch
  std::vector<double> gradient;  // dJ/dparams; empty unless requested
};

/// Evaluates the GRPO objective averaged over groups, samples and steps. A
/// path's advantage is shared by all of its steps. Throws Error(kComputation)
/// when a probability ratio is not finite.
ObjectiveValue grpo_objective(const RoutingPolicy& policy, std::span<const PolicyGroup> groups,
                              const RoutingPolicy& reference, const GrpoConfig& config,
                              bool with_gradient = true);

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

struct StepDiagnostics {
  double objective = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double gradient_norm = 0.0;
};

/// One gradient-ascent update of policy in place.
StepDiagnostics grpo_step(RoutingPolicy& policy, std::span<const PolicyGroup> groups,
                          const RoutingPolicy& reference, const GrpoConfig& config,
                          OptimizerState& state);

struct CurvePoint {
  std::uint64_t step = 0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  RoutingPolicy policy;
  std::vector<CurvePoint> curve;
  std::vector<double> epoch_mean_reward;  // mean sampled reward per epoch
};

/// Every epoch visits the dataset in a seeded shuffled order, batch by
/// batch: snapshot the policy, sample a group per query, then take
/// updates_per_batch steps. The initial policy doubles as the KL reference.
TrainResult train(std::span<const RoutedQuery> dataset, const RoutingPolicy& initial,
                  const GrpoConfig& config);

std::string curve_to_csv(std::span<const CurvePoint> curve);

/// Exact expected hierarchical reward of the policy on one query.
double expected_reward(const RoutingPolicy& policy, const RoutedQuery& query);

/// Total-variation distance between the path distributions of two policies.
double path_total_variation(const RoutingPolicy& a, const RoutingPolicy& b,
                            std::span<const std::uint32_t> features);

}  // namespace fuserank
