#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evl/corpus.hpp"
#include "evl/nn.hpp"
#include "evl/tokenizer.hpp"

namespace evl {

// Anything that maps a text to a real logit, positive meaning human-written.
class LogitScorer {
 public:
  virtual ~LogitScorer() = default;
  virtual double logit(std::string_view text) const = 0;
};

struct EncoderConfig {
  int layers = 2;
  int heads = 4;
  int dim = 64;
  int max_len = 48;
  double learning_rate = 1e-3;
  int epochs = 6;
  int batch_size = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

// Bidirectional transformer encoder, mean-pooled, with a linear logit head.
class EncoderClassifier : public LogitScorer {
 public:
  EncoderClassifier(Tokenizer tok, const nn::Architecture& arch, std::uint64_t seed);
  EncoderClassifier(Tokenizer tok, const nn::Architecture& arch, std::vector<double> parameters);

  const Tokenizer& tokenizer() const { return tok_; }
  const nn::Architecture& architecture() const { return stack_.arch(); }
  int max_len() const { return architecture().context; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> mutable_parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  double final_loss() const { return final_loss_; }
  void set_final_loss(double v) { final_loss_ = v; }

  // BOS ... EOS ids, cut to the first max_len.
  std::vector<TokenId> prepare(std::string_view text) const;

  double logit(std::string_view text) const override;
  double logit_tokens(std::span<const TokenId> tokens) const;
  Label classify(std::string_view text) const { return logit(text) >= 0.0 ? Label::human : Label::machine; }

  // Binary cross-entropy of one example; accumulates its gradient scaled by `scale` when grads is non-empty.
  double loss_and_grad(std::span<const TokenId> tokens, Label label, double scale, std::span<double> grads) const;

 private:
  Tokenizer tok_;
  nn::ParameterLayout layout_;
  nn::TransformerStack stack_;
  nn::TensorSpec w_head_, b_head_;
  nn::Buffer params_;
  double final_loss_ = 0.0;
};

struct EncoderTrainingLog {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

EncoderClassifier enc_train(const LabeledSet& data, const Tokenizer& tok, const EncoderConfig& cfg,
                            EncoderTrainingLog* log = nullptr);
inline double enc_score(const EncoderClassifier& m, std::string_view text) { return m.logit(text); }

void save_encoder(const std::filesystem::path& path, const EncoderClassifier& m);
EncoderClassifier load_encoder(const std::filesystem::path& path, const Tokenizer& tok);

}  // namespace evl
