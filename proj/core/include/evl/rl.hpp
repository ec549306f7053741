#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evl/acceptability.hpp"
#include "evl/dictionary.hpp"
#include "evl/encoder.hpp"
#include "evl/lm.hpp"
#include "evl/nn.hpp"
#include "evl/reward.hpp"
#include "evl/rng.hpp"
#include "evl/sampling.hpp"

namespace evl {

struct RlConfig {
  double learning_rate = 5e-5;
  int mini_batch = 4;
  int rollout_batch = 16;
  double kl_coefficient = 0.1;
  double clip_ratio = 0.2;
  int ppo_epochs = 4;
  double prefix_probability = 0.5;
  int max_prefix_tokens = 6;
  double grad_clip = 1.0;
  int steps = 300;
  std::uint64_t seed = 1;

  void validate() const;
};

using TokenSeq = std::vector<TokenId>;

// Each query is BOS followed, with probability rho, by the first j tokens of a
// uniformly drawn human sequence, j uniform in [1, min(max_prefix, length)].
// Human sequences may carry BOS/EOS; those are not counted as tweet tokens.
std::vector<TokenSeq> make_queries(std::span<const TokenSeq> human, std::size_t batch_size, double rho,
                                   std::uint64_t seed, int max_prefix = 6);

struct RolloutBatch {
  std::vector<TokenSeq> queries;
  std::vector<TokenSeq> responses;
  std::vector<std::vector<double>> policy_logprobs;     // one per response token
  std::vector<std::vector<double>> reference_logprobs;  // one per response token
  // Per sequence: sum over response positions of KL(policy || reference)
  // between full next-token distributions, at rollout time.
  std::vector<double> kl;
  std::vector<std::string> query_texts;
  std::vector<std::string> response_texts;
  std::vector<RewardBreakdown> rewards;

  std::size_t size() const { return queries.size(); }
  TokenSeq sequence(std::size_t i) const;
};

// Sample i draws from a generator seeded with derive_seed(seed, i).
RolloutBatch rollout(const LmPolicy& policy, const LmPolicy& reference, std::span<const TokenSeq> queries,
                     const SamplingConfig& sampling, std::uint64_t seed);

struct RewardContext {
  const Tokenizer* tokenizer = nullptr;
  const LogitScorer* detector = nullptr;
  const AcceptabilityScorer* scorer = nullptr;
  const Dictionary* dictionary = nullptr;
  RewardConfig config;
};

void evaluate(RolloutBatch& batch, const RewardContext& ctx);

// Per-token advantages: return-to-go of the final reward minus the KL penalty
// (gamma = 1), whitened over every response token in the batch.
std::vector<std::vector<double>> compute_advantages(const RolloutBatch& batch, double kl_coefficient);

// Clipped surrogate -min(r A, clip(r, 1-eps, 1+eps) A) for one token, and its
// derivative with respect to log pi.
double clipped_surrogate(double ratio, double advantage, double eps);
double clipped_surrogate_grad(double ratio, double advantage, double eps);

// Mean over sequences of the summed per-position KL(pi || pi_ref) on the
// batch's response contexts, using the policy's current parameters.
double batch_kl(const LmPolicy& policy, const LmPolicy& reference, const RolloutBatch& batch);

struct PpoStats {
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double loss = 0.0;
  std::array<int, kRuleCount> rule_triggers{};
};

class PpoTrainer {
 public:
  PpoTrainer(const LmPolicy& policy, const RlConfig& cfg);
  // Throws and restores the previous parameters on a non-finite loss.
  PpoStats step(LmPolicy& policy, const RolloutBatch& batch);

 private:
  RlConfig cfg_;
  nn::Adam opt_;
  Rng rng_;
};

struct RlTrace {
  std::vector<PpoStats> steps;
  std::size_t best_step = 0;
};

struct RlRun {
  LmPolicy final_policy;
  LmPolicy best_policy;
  RlTrace trace;
};

// Called once per step with the evaluated batch and its statistics.
using RlObserver = std::function<void(int step, const RolloutBatch&, const PpoStats&)>;

RlRun rl_train(const LmPolicy& policy, const LmPolicy& reference, std::span<const TokenSeq> human_queries,
               const RewardContext& reward, const RlConfig& cfg, const SamplingConfig& sampling,
               const RlObserver& observer = {});

struct PrePostResult {
  double f1_pre = 0.0;
  double f1_post = 0.0;
  double accuracy_pre = 0.0;
  double accuracy_post = 0.0;
};

// Generates n samples from each policy (same prompts and seeds) and scores
// the detector against n human evaluation texts.
PrePostResult pre_post_eval(const LogitScorer& detector, const Tokenizer& tok, const LmPolicy& pre,
                            const LmPolicy& post, std::span<const std::string> human_eval,
                            std::span<const TokenSeq> prompt_pool, const SamplingConfig& sampling,
                            double prefix_probability, int max_prefix, std::size_t n, std::uint64_t seed);

void write_rl_log_header(std::ostream& out);
void write_rl_log_row(std::ostream& out, int step, const PpoStats& s);

}  // namespace evl
