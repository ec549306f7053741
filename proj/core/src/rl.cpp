#include "evl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "evl/error.hpp"
#include "evl/metrics.hpp"

namespace evl {

void RlConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("rl learning_rate must be positive");
  if (mini_batch <= 0 || rollout_batch <= 0) throw ConfigError("rl batch sizes must be positive");
  if (mini_batch > rollout_batch) throw ConfigError("rl mini_batch must not exceed rollout_batch");
  if (!(kl_coefficient >= 0.0)) throw ConfigError("rl kl_coefficient must be non-negative");
  if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) throw ConfigError("rl clip_ratio must lie in (0, 1)");
  if (ppo_epochs <= 0) throw ConfigError("rl ppo_epochs must be positive");
  if (!(prefix_probability >= 0.0 && prefix_probability <= 1.0)) {
    throw ConfigError("rl prefix_probability must lie in [0, 1]");
  }
  if (max_prefix_tokens < 1) throw ConfigError("rl max_prefix_tokens must be at least 1");
  if (!(grad_clip > 0.0)) throw ConfigError("rl grad_clip must be positive");
  if (steps < 0) throw ConfigError("rl steps must be non-negative");
}

std::vector<TokenSeq> make_queries(std::span<const TokenSeq> human, std::size_t batch_size, double rho,
                                   std::uint64_t seed, int max_prefix) {
  if (human.empty()) throw Error("make_queries needs a nonempty human corpus");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("prefix probability must lie in [0, 1]");
  if (max_prefix < 1) throw ConfigError("max_prefix must be at least 1");
  Rng rng(derive_seed(seed, 0x9e41));
  std::vector<TokenSeq> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    TokenSeq q{Tokenizer::kBos};
    if (rng.bernoulli(rho)) {
      const auto& src = human[rng.below(human.size())];
      TokenSeq body;
      for (TokenId t : src) {
        if (t != Tokenizer::kBos && t != Tokenizer::kEos && t != Tokenizer::kPad) body.push_back(t);
      }
      const auto cap = std::min<std::size_t>(static_cast<std::size_t>(max_prefix), body.size());
      if (cap > 0) {
        const auto j = 1 + rng.below(cap);
        q.insert(q.end(), body.begin(), body.begin() + static_cast<std::ptrdiff_t>(j));
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

TokenSeq RolloutBatch::sequence(std::size_t i) const {
  TokenSeq s = queries[i];
  s.insert(s.end(), responses[i].begin(), responses[i].end());
  return s;
}

namespace {

std::vector<double> response_logprobs(const LmPolicy::Pass& pass, const TokenSeq& seq, std::size_t qlen) {
  std::vector<double> out;
  for (std::size_t t = qlen; t < seq.size(); ++t) {
    out.push_back(pass.log_probs(static_cast<nn::Index>(t - 1), seq[t]));
  }
  return out;
}

// Sum over response positions of KL(p || q) between the full next-token distributions.
double exact_kl(const LmPolicy::Pass& p, const LmPolicy::Pass& q, std::size_t qlen, std::size_t len) {
  double kl = 0.0;
  for (std::size_t t = qlen; t < len; ++t) {
    const auto r = static_cast<nn::Index>(t - 1);
    const auto lp = p.log_probs.row(r).array();
    kl += (lp.exp() * (lp - q.log_probs.row(r).array())).sum();
  }
  return std::max(0.0, kl);
}

}  // namespace

RolloutBatch rollout(const LmPolicy& policy, const LmPolicy& reference, std::span<const TokenSeq> queries,
                     const SamplingConfig& sampling, std::uint64_t seed) {
  sampling.validate();
  RolloutBatch b;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    TokenSeq q = queries[i];
    if (q.empty() || q.front() != Tokenizer::kBos) q.insert(q.begin(), Tokenizer::kBos);
    TokenSeq full = generate(policy, q, sampling, rng);
    TokenSeq resp(full.begin() + static_cast<std::ptrdiff_t>(q.size()), full.end());
    if (resp.empty()) {
      b.policy_logprobs.emplace_back();
      b.reference_logprobs.emplace_back();
      b.kl.push_back(0.0);
    } else {
      const auto pp = policy.forward(full);
      const auto rp = reference.forward(full);
      b.policy_logprobs.push_back(response_logprobs(pp, full, q.size()));
      b.reference_logprobs.push_back(response_logprobs(rp, full, q.size()));
      b.kl.push_back(exact_kl(pp, rp, q.size(), full.size()));
    }
    b.queries.push_back(std::move(q));
    b.responses.push_back(std::move(resp));
  }
  return b;
}

void evaluate(RolloutBatch& batch, const RewardContext& ctx) {
  if (!ctx.tokenizer || !ctx.detector || !ctx.scorer || !ctx.dictionary) {
    throw Error("reward context is incomplete");
  }
  std::vector<RewardInput> inputs;
  batch.query_texts.clear();
  batch.response_texts.clear();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    RewardInput in;
    in.query = ctx.tokenizer->decode(batch.queries[i]);
    in.response = ctx.tokenizer->decode(batch.responses[i]);
    in.tokens = batch.sequence(i);
    in.text = ctx.tokenizer->decode(in.tokens);
    batch.query_texts.push_back(in.query);
    batch.response_texts.push_back(in.response);
    inputs.push_back(std::move(in));
  }
  batch.rewards = score_batch(inputs, *ctx.detector, ctx.config, *ctx.scorer, *ctx.dictionary);
}

std::vector<std::vector<double>> compute_advantages(const RolloutBatch& batch, double kl_coefficient) {
  if (batch.rewards.size() != batch.size()) throw Error("rollout batch has not been evaluated");
  std::vector<std::vector<double>> adv(batch.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& lp = batch.policy_logprobs[i];
    const auto& ref = batch.reference_logprobs[i];
    adv[i].resize(lp.size());
    double ret = batch.rewards[i].final;
    for (std::size_t t = lp.size(); t-- > 0;) {
      ret -= kl_coefficient * (lp[t] - ref[t]);
      adv[i][t] = ret;
      sum += ret;
      ++n;
    }
  }
  if (n == 0) return adv;
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& a : adv) {
    for (double v : a) var += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (auto& a : adv) {
    for (double& v : a) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
  }
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return -std::min(ratio * advantage, clipped * advantage);
}

double clipped_surrogate_grad(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  // gradient flows only when the unclipped term is the minimum
  if (ratio * advantage <= clipped * advantage) return -ratio * advantage;
  return 0.0;
}

double batch_kl(const LmPolicy& policy, const LmPolicy& reference, const RolloutBatch& batch) {
  if (batch.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.responses[i].empty()) continue;
    const auto seq = batch.sequence(i);
    total += exact_kl(policy.forward(seq), reference.forward(seq), batch.queries[i].size(), seq.size());
  }
  return total / static_cast<double>(batch.size());
}

PpoTrainer::PpoTrainer(const LmPolicy& policy, const RlConfig& cfg)
    : cfg_(cfg), opt_(policy.parameter_count(), cfg.learning_rate), rng_(derive_seed(cfg.seed, 0x990)) {
  cfg_.validate();
}

PpoStats PpoTrainer::step(LmPolicy& policy, const RolloutBatch& batch) {
  for (const auto& r : batch.rewards) {
    if (!std::isfinite(r.final)) throw Error("non-finite reward in PPO batch");
  }
  const auto adv = compute_advantages(batch, cfg_.kl_coefficient);
  PpoStats stats;
  double kl = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    stats.mean_reward += batch.rewards[i].final;
    if (i < batch.kl.size()) kl += batch.kl[i];
    for (RuleId r : kAllRules) {
      if (batch.rewards[i].rule(r) < 0.0) ++stats.rule_triggers[static_cast<std::size_t>(r)];
    }
  }
  if (batch.size() > 0) {
    stats.mean_reward /= static_cast<double>(batch.size());
    stats.mean_kl = kl / static_cast<double>(batch.size());
  }

  const std::vector<double> saved(policy.parameters().begin(), policy.parameters().end());
  const nn::Adam saved_opt = opt_;
  nn::Buffer grads(policy.parameter_count());
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mb = static_cast<std::size_t>(cfg_.mini_batch);
  double loss_sum = 0.0;
  std::size_t updates = 0;
  for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
    rng_.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      std::size_t tokens = 0;
      for (std::size_t k = start; k < end; ++k) tokens += batch.responses[order[k]].size();
      if (tokens == 0) continue;
      std::fill(grads.begin(), grads.end(), 0.0);
      double loss = 0.0;
      const double inv = 1.0 / static_cast<double>(tokens);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        if (batch.responses[i].empty()) continue;
        const TokenSeq seq = batch.sequence(i);
        const auto pass = policy.forward(seq);
        const std::size_t q = batch.queries[i].size();
        std::vector<double> coeff(seq.size() - 1, 0.0);
        for (std::size_t t = 0; t < batch.responses[i].size(); ++t) {
          const auto row = static_cast<nn::Index>(q + t - 1);
          const double lp = pass.log_probs(row, seq[q + t]);
          const double ratio = std::exp(lp - batch.policy_logprobs[i][t]);
          loss += inv * clipped_surrogate(ratio, adv[i][t], cfg_.clip_ratio);
          coeff[q + t - 1] = inv * clipped_surrogate_grad(ratio, adv[i][t], cfg_.clip_ratio);
        }
        policy.backward(pass, coeff, grads);
      }
      const double norm = nn::clip_global_norm(grads, cfg_.grad_clip);
      if (!std::isfinite(loss) || !std::isfinite(norm)) {
        std::copy(saved.begin(), saved.end(), policy.mutable_parameters().begin());
        opt_ = saved_opt;
        throw Error("non-finite PPO loss; parameters restored");
      }
      opt_.step(policy.mutable_parameters(), grads);
      loss_sum += loss;
      ++updates;
    }
  }
  policy.record_step();
  stats.loss = updates > 0 ? loss_sum / static_cast<double>(updates) : 0.0;
  return stats;
}

RlRun rl_train(const LmPolicy& policy, const LmPolicy& reference, std::span<const TokenSeq> human_queries,
               const RewardContext& reward, const RlConfig& cfg, const SamplingConfig& sampling,
               const RlObserver& observer) {
  cfg.validate();
  sampling.validate();
  const LmPolicy ref = reference.frozen() ? reference : reference.snapshot();
  RlRun run{policy, policy, {}};
  if (run.final_policy.frozen()) throw Error("cannot fine-tune a frozen snapshot");
  PpoTrainer trainer(run.final_policy, cfg);
  double best = -std::numeric_limits<double>::infinity();
  for (int step = 0; step < cfg.steps; ++step) {
    const auto stream = derive_seed(cfg.seed, static_cast<std::uint64_t>(step));
    const auto queries = make_queries(human_queries, static_cast<std::size_t>(cfg.rollout_batch),
                                      cfg.prefix_probability, derive_seed(stream, 1), cfg.max_prefix_tokens);
    RolloutBatch batch = rollout(run.final_policy, ref, queries, sampling, derive_seed(stream, 2));
    evaluate(batch, reward);
    // the batch reflects the parameters before this update
    LmPolicy before = run.final_policy;
    const PpoStats stats = trainer.step(run.final_policy, batch);
    run.trace.steps.push_back(stats);
    if (stats.mean_reward > best) {
      best = stats.mean_reward;
      run.trace.best_step = static_cast<std::size_t>(step);
      run.best_policy = std::move(before);
    }
    if (observer) observer(step, batch, stats);
  }
  return run;
}

PrePostResult pre_post_eval(const LogitScorer& detector, const Tokenizer& tok, const LmPolicy& pre,
                            const LmPolicy& post, std::span<const std::string> human_eval,
                            std::span<const TokenSeq> prompt_pool, const SamplingConfig& sampling,
                            double prefix_probability, int max_prefix, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error("pre/post evaluation needs at least one sample");
  if (human_eval.size() < n) throw Error("not enough human evaluation texts");
  const auto queries = make_queries(prompt_pool, n, prefix_probability, derive_seed(seed, 1), max_prefix);
  std::vector<Label> gold;
  std::vector<Label> human_pred;
  for (std::size_t i = 0; i < n; ++i) {
    human_pred.push_back(detector.logit(human_eval[i]) >= 0.0 ? Label::human : Label::machine);
    gold.push_back(Label::human);
  }
  for (std::size_t i = 0; i < n; ++i) gold.push_back(Label::machine);
  const auto score = [&](const LmPolicy& m) {
    std::vector<Label> pred = human_pred;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(derive_seed(seed, 2), i));
      const auto seq = generate(m, queries[i], sampling, rng);
      pred.push_back(detector.logit(tok.decode(seq)) >= 0.0 ? Label::human : Label::machine);
    }
    return compute_metrics(pred, gold);
  };
  const Metrics a = score(pre);
  const Metrics b = score(post);
  return {a.f1, b.f1, a.accuracy, b.accuracy};
}

void write_rl_log_header(std::ostream& out) {
  out << "step\tmean_reward\tmean_kl\tloss";
  for (RuleId r : kAllRules) out << '\t' << to_string(r);
  out << '\n';
}

void write_rl_log_row(std::ostream& out, int step, const PpoStats& s) {
  out << step << std::fixed << std::setprecision(6) << '\t' << s.mean_reward << '\t' << s.mean_kl << '\t'
      << s.loss << std::defaultfloat;
  for (int c : s.rule_triggers) out << '\t' << c;
  out << '\n';
}

}  // namespace evl
