#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evl/corpus.hpp"
#include "evl/nn.hpp"
#include "evl/tokenizer.hpp"

namespace evl {

struct LmConfig {
  int embedding_dim = 64;
  int layers = 2;
  int heads = 2;
  int context_len = 48;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int epochs = 3;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double grad_clip = 1.0;
  double holdout_fraction = 0.1;

  void validate() const;
  nn::Architecture architecture(int vocab_size) const;
};

// Decoder-only transformer language model. Serves as generator, RL policy
// and (frozen) reference model.
class LmPolicy {
 public:
  LmPolicy(const nn::Architecture& arch, std::uint64_t seed);
  LmPolicy(const nn::Architecture& arch, std::vector<double> parameters, std::uint64_t steps);

  const nn::Architecture& architecture() const { return stack_.arch(); }
  int vocab_size() const { return architecture().vocab_size; }
  int context_len() const { return architecture().context; }

  std::span<const double> parameters() const { return params_; }
  // Throws for frozen snapshots.
  std::span<double> mutable_parameters();
  std::size_t parameter_count() const { return params_.size(); }

  bool frozen() const { return frozen_; }
  LmPolicy snapshot() const;

  std::uint64_t training_steps() const { return steps_; }
  void record_step();

  // Forward pass over a whole sequence; log_probs row t is log P(. | tokens[0..t]).
  struct Pass {
    nn::TransformerStack::Cache cache;
    nn::Matrix log_probs;
  };
  Pass forward(std::span<const TokenId> tokens) const;
  // Accumulates into grads the gradient of sum_t coeff[t] * log P(tokens[t+1] | tokens[0..t]).
  void backward(const Pass& pass, std::span<const double> coeff, std::span<double> grads) const;

  std::vector<double> next_token_logits(std::span<const TokenId> prefix) const;
  // softmax(logits / temperature); temperature must be positive.
  std::vector<double> next_token_dist(std::span<const TokenId> prefix, double temperature) const;
  // Entry i is log P(tokens[i+1] | tokens[0..i]); needs at least two tokens.
  std::vector<double> sequence_log_probs(std::span<const TokenId> tokens) const;
  double mean_token_nll(const std::vector<std::vector<TokenId>>& sequences) const;

  // Incremental decoding with cached keys and values.
  class Decoder {
   public:
    explicit Decoder(const LmPolicy& policy);
    std::vector<double> feed(TokenId token);
    int length() const { return state_.length; }

   private:
    const LmPolicy* policy_;
    nn::TransformerStack::KvState state_;
  };

 private:
  std::vector<double> logits_from_hidden(const nn::RowVector& h) const;

  nn::ParameterLayout layout_;
  nn::TransformerStack stack_;
  nn::TensorSpec w_out_, b_out_;
  nn::Buffer params_;
  std::uint64_t steps_ = 0;
  bool frozen_ = false;
};

inline LmPolicy snapshot_reference(const LmPolicy& m) { return m.snapshot(); }

struct LmTrainingLog {
  std::vector<double> holdout_loss;  // [0] before training, then one entry per epoch
  std::vector<double> train_loss;    // mean token loss per epoch
  std::vector<std::string> warnings;
};

// Sequences are truncated to the context window. Deterministic given cfg.seed.
LmPolicy train_lm(const std::vector<std::vector<TokenId>>& sequences, int vocab_size,
                  const LmConfig& cfg, LmTrainingLog* log = nullptr);
LmPolicy train_lm(const Corpus& c, const Tokenizer& tok, const LmConfig& cfg,
                  LmTrainingLog* log = nullptr);

std::vector<std::vector<TokenId>> encode_all(const Tokenizer& tok, const std::vector<std::string>& texts);

}  // namespace evl
