#include "evl/lm.hpp"

#include <algorithm>
#include <cmath>

#include "evl/error.hpp"
#include "evl/rng.hpp"

namespace evl {

void LmConfig::validate() const {
  if (embedding_dim <= 0 || layers <= 0 || heads <= 0) {
    throw ConfigError("lm dimensions must be positive");
  }
  if (embedding_dim % heads != 0) throw ConfigError("lm embedding_dim must be divisible by heads");
  if (context_len < 2) throw ConfigError("lm context_len must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("lm learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("lm momentum must lie in [0, 1)");
  if (epochs <= 0 || batch_size <= 0) throw ConfigError("lm epochs and batch_size must be positive");
  if (!(grad_clip > 0.0)) throw ConfigError("lm grad_clip must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("lm holdout_fraction must lie in [0, 1)");
  }
}

nn::Architecture LmConfig::architecture(int vocab_size) const {
  nn::Architecture a;
  a.vocab_size = vocab_size;
  a.dim = embedding_dim;
  a.layers = layers;
  a.heads = heads;
  a.context = context_len;
  a.causal = true;
  return a;
}

LmPolicy::LmPolicy(const nn::Architecture& arch, std::uint64_t seed) : stack_(arch, layout_) {
  if (!arch.causal) throw ConfigError("language model must be causal");
  w_out_ = layout_.spec(layout_.add("w_out", arch.dim, arch.vocab_size));
  b_out_ = layout_.spec(layout_.add("b_out", 1, arch.vocab_size));
  params_.assign(layout_.total(), 0.0);
  stack_.init(params_, seed);
  Rng rng(derive_seed(seed, 0x4ead));
  auto w = nn::view(std::span<double>(params_), w_out_);
  for (nn::Index i = 0; i < w.rows(); ++i) {
    for (nn::Index j = 0; j < w.cols(); ++j) w(i, j) = 0.02 * rng.normal();
  }
}

LmPolicy::LmPolicy(const nn::Architecture& arch, std::vector<double> parameters, std::uint64_t steps)
    : stack_(arch, layout_), steps_(steps) {
  if (!arch.causal) throw ConfigError("language model must be causal");
  w_out_ = layout_.spec(layout_.add("w_out", arch.dim, arch.vocab_size));
  b_out_ = layout_.spec(layout_.add("b_out", 1, arch.vocab_size));
  if (parameters.size() != layout_.total()) {
    throw Error("parameter count " + std::to_string(parameters.size()) +
                " does not match architecture (" + std::to_string(layout_.total()) + ")");
  }
  params_.assign(parameters.begin(), parameters.end());
}

std::span<double> LmPolicy::mutable_parameters() {
  if (frozen_) throw Error("reference snapshot is frozen and cannot be trained");
  return params_;
}

LmPolicy LmPolicy::snapshot() const {
  LmPolicy copy = *this;
  copy.frozen_ = true;
  return copy;
}

void LmPolicy::record_step() {
  if (frozen_) throw Error("reference snapshot is frozen and cannot be trained");
  ++steps_;
}

LmPolicy::Pass LmPolicy::forward(std::span<const TokenId> tokens) const {
  Pass pass;
  stack_.forward(params_, tokens, pass.cache);
  nn::Matrix logits = pass.cache.hidden * nn::view(std::span<const double>(params_), w_out_);
  logits.rowwise() += nn::view(std::span<const double>(params_), b_out_).row(0);
  pass.log_probs = nn::log_softmax_rows(logits);
  return pass;
}

void LmPolicy::backward(const Pass& pass, std::span<const double> coeff, std::span<double> grads) const {
  const auto& tokens = pass.cache.tokens;
  const auto n = static_cast<nn::Index>(tokens.size());
  if (coeff.size() + 1 != tokens.size()) throw Error("coefficient count must be sequence length - 1");
  if (grads.size() != params_.size()) throw Error("gradient buffer has the wrong size");
  // d/dlogits of c * log_softmax(logits)[y] = c * (onehot(y) - softmax)
  nn::Matrix d_logits = nn::Matrix::Zero(n, vocab_size());
  for (nn::Index t = 0; t + 1 < n; ++t) {
    const double c = coeff[static_cast<std::size_t>(t)];
    if (c == 0.0) continue;
    d_logits.row(t) = -c * pass.log_probs.row(t).array().exp();
    d_logits(t, tokens[static_cast<std::size_t>(t) + 1]) += c;
  }
  nn::view(grads, w_out_).noalias() += pass.cache.hidden.transpose() * d_logits;
  nn::view(grads, b_out_).row(0) += d_logits.colwise().sum();
  const nn::Matrix d_hidden = d_logits * nn::view(std::span<const double>(params_), w_out_).transpose();
  stack_.backward(params_, pass.cache, d_hidden, grads);
}

std::vector<double> LmPolicy::logits_from_hidden(const nn::RowVector& h) const {
  nn::RowVector logits = h * nn::view(std::span<const double>(params_), w_out_);
  logits += nn::view(std::span<const double>(params_), b_out_).row(0);
  return {logits.data(), logits.data() + logits.size()};
}

std::vector<double> LmPolicy::next_token_logits(std::span<const TokenId> prefix) const {
  if (prefix.empty()) throw Error("prefix must hold at least one token");
  if (static_cast<int>(prefix.size()) > context_len()) throw Error("prefix longer than context window");
  nn::TransformerStack::Cache cache;
  stack_.forward(params_, prefix, cache);
  return logits_from_hidden(cache.hidden.row(cache.hidden.rows() - 1));
}

std::vector<double> LmPolicy::next_token_dist(std::span<const TokenId> prefix, double temperature) const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  auto logits = next_token_logits(prefix);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp((l - m) / temperature);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

std::vector<double> LmPolicy::sequence_log_probs(std::span<const TokenId> tokens) const {
  if (tokens.size() < 2) throw Error("sequence_log_probs needs at least two tokens");
  if (static_cast<int>(tokens.size()) > context_len()) throw Error("sequence longer than context window");
  const Pass pass = forward(tokens);
  std::vector<double> out(tokens.size() - 1);
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    out[t] = pass.log_probs(static_cast<nn::Index>(t), tokens[t + 1]);
  }
  return out;
}

double LmPolicy::mean_token_nll(const std::vector<std::vector<TokenId>>& sequences) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : sequences) {
    if (s.size() < 2) continue;
    for (double lp : sequence_log_probs(s)) total -= lp;
    count += s.size() - 1;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

LmPolicy::Decoder::Decoder(const LmPolicy& policy) : policy_(&policy), state_(policy.stack_.begin()) {}

std::vector<double> LmPolicy::Decoder::feed(TokenId token) {
  const nn::RowVector h = policy_->stack_.step(policy_->params_, token, state_);
  return policy_->logits_from_hidden(h);
}

std::vector<std::vector<TokenId>> encode_all(const Tokenizer& tok, const std::vector<std::string>& texts) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tok.encode(t));
  return out;
}

LmPolicy train_lm(const std::vector<std::vector<TokenId>>& sequences, int vocab_size,
                  const LmConfig& cfg, LmTrainingLog* log) {
  cfg.validate();
  if (sequences.empty()) throw Error("cannot train a language model on an empty corpus");
  LmTrainingLog local;
  LmTrainingLog& out = log ? *log : local;
  out = {};

  std::size_t longest = 0;
  std::vector<std::vector<TokenId>> data;
  data.reserve(sequences.size());
  for (const auto& s : sequences) {
    longest = std::max(longest, s.size());
    if (s.size() < 2) continue;
    const auto n = std::min(s.size(), static_cast<std::size_t>(cfg.context_len));
    data.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
  }
  if (data.empty()) throw Error("no sequence has at least two tokens");
  if (static_cast<std::size_t>(cfg.context_len) > longest) {
    out.warnings.push_back("context_len " + std::to_string(cfg.context_len) +
                           " exceeds the longest sequence (" + std::to_string(longest) + " tokens)");
  }

  Rng rng(derive_seed(cfg.seed, 0xda7a));
  rng.shuffle(data);
  auto n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
  std::vector<std::vector<TokenId>> holdout;
  std::vector<std::vector<TokenId>> train;
  if (n_hold == 0 || n_hold >= data.size()) {
    train = data;
    holdout = data;
  } else {
    holdout.assign(data.end() - static_cast<std::ptrdiff_t>(n_hold), data.end());
    train.assign(data.begin(), data.end() - static_cast<std::ptrdiff_t>(n_hold));
  }

  LmPolicy model(cfg.architecture(vocab_size), derive_seed(cfg.seed, 0x1417));
  nn::SgdMomentum opt(model.parameter_count(), cfg.learning_rate, cfg.momentum);
  nn::Buffer grads(model.parameter_count());
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  out.holdout_loss.push_back(model.mean_token_nll(holdout));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) batch_tokens += train[order[i]].size() - 1;
      std::fill(grads.begin(), grads.end(), 0.0);
      const double c = -1.0 / static_cast<double>(batch_tokens);
      for (std::size_t i = start; i < end; ++i) {
        const auto& seq = train[order[i]];
        const auto pass = model.forward(seq);
        for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
          epoch_loss -= pass.log_probs(static_cast<nn::Index>(t), seq[t + 1]);
        }
        std::vector<double> coeff(seq.size() - 1, c);
        model.backward(pass, coeff, grads);
      }
      epoch_tokens += batch_tokens;
      // grads holds d(-mean log p)/d(theta)
      nn::clip_global_norm(grads, cfg.grad_clip);
      opt.step(model.mutable_parameters(), grads);
      model.record_step();
    }
    out.train_loss.push_back(epoch_loss / static_cast<double>(epoch_tokens));
    out.holdout_loss.push_back(model.mean_token_nll(holdout));
  }
  return model;
}

LmPolicy train_lm(const Corpus& c, const Tokenizer& tok, const LmConfig& cfg, LmTrainingLog* log) {
  if (c.empty()) throw Error("cannot train a language model on an empty corpus");
  return train_lm(encode_all(tok, c.texts()), static_cast<int>(tok.size()), cfg, log);
}

}  // namespace evl
