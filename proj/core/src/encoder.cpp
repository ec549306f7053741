#include "evl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evl/checkpoint.hpp"
#include "evl/error.hpp"
#include "evl/rng.hpp"

namespace evl {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

nn::Architecture encoder_arch(const EncoderConfig& cfg, int vocab) {
  nn::Architecture a;
  a.vocab_size = vocab;
  a.dim = cfg.dim;
  a.layers = cfg.layers;
  a.heads = cfg.heads;
  a.context = cfg.max_len;
  a.causal = false;
  return a;
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers <= 0 || heads <= 0 || dim <= 0) throw ConfigError("encoder dimensions must be positive");
  if (dim % heads != 0) throw ConfigError("encoder dim must be divisible by heads");
  if (max_len < 2) throw ConfigError("encoder max_len must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("encoder learning_rate must be positive");
  if (epochs <= 0 || batch_size <= 0) throw ConfigError("encoder epochs and batch_size must be positive");
}

EncoderClassifier::EncoderClassifier(Tokenizer tok, const nn::Architecture& arch, std::uint64_t seed)
    : tok_(std::move(tok)), stack_(arch, layout_) {
  if (arch.causal) throw ConfigError("encoder classifier must be bidirectional");
  if (static_cast<std::size_t>(arch.vocab_size) != tok_.size()) throw Error("tokenizer and architecture disagree on vocabulary size");
  w_head_ = layout_.spec(layout_.add("w_head", arch.dim, 1));
  b_head_ = layout_.spec(layout_.add("b_head", 1, 1));
  params_.assign(layout_.total(), 0.0);
  stack_.init(params_, seed);
  Rng rng(derive_seed(seed, 0x4ead));
  auto w = nn::view(std::span<double>(params_), w_head_);
  for (nn::Index i = 0; i < w.rows(); ++i) w(i, 0) = rng.normal() / std::sqrt(static_cast<double>(arch.dim));
}

EncoderClassifier::EncoderClassifier(Tokenizer tok, const nn::Architecture& arch, std::vector<double> parameters)
    : tok_(std::move(tok)), stack_(arch, layout_) {
  if (arch.causal) throw ConfigError("encoder classifier must be bidirectional");
  if (static_cast<std::size_t>(arch.vocab_size) != tok_.size()) throw Error("tokenizer and architecture disagree on vocabulary size");
  w_head_ = layout_.spec(layout_.add("w_head", arch.dim, 1));
  b_head_ = layout_.spec(layout_.add("b_head", 1, 1));
  if (parameters.size() != layout_.total()) throw Error("encoder parameter count does not match architecture");
  params_.assign(parameters.begin(), parameters.end());
}

std::vector<TokenId> EncoderClassifier::prepare(std::string_view text) const {
  auto ids = tok_.encode(text);
  if (ids.size() > static_cast<std::size_t>(max_len())) ids.resize(static_cast<std::size_t>(max_len()));
  return ids;
}

double EncoderClassifier::logit_tokens(std::span<const TokenId> tokens) const {
  if (tokens.size() > static_cast<std::size_t>(max_len())) tokens = tokens.first(static_cast<std::size_t>(max_len()));
  nn::TransformerStack::Cache cache;
  stack_.forward(params_, tokens, cache);
  const nn::RowVector pooled = cache.hidden.colwise().mean();
  const std::span<const double> p(params_);
  return (pooled * nn::view(p, w_head_))(0, 0) + nn::view(p, b_head_)(0, 0);
}

double EncoderClassifier::logit(std::string_view text) const { return logit_tokens(prepare(text)); }

double EncoderClassifier::loss_and_grad(std::span<const TokenId> tokens, Label label, double scale,
                                        std::span<double> grads) const {
  nn::TransformerStack::Cache cache;
  stack_.forward(params_, tokens, cache);
  const nn::RowVector pooled = cache.hidden.colwise().mean();
  const std::span<const double> p(params_);
  const double z = (pooled * nn::view(p, w_head_))(0, 0) + nn::view(p, b_head_)(0, 0);
  const double y = label == Label::human ? 1.0 : 0.0;
  const double loss = y > 0.5 ? softplus(-z) : softplus(z);
  if (grads.empty()) return loss;
  if (grads.size() != params_.size()) throw Error("gradient buffer has the wrong size");
  const double dz = scale * (sigmoid(z) - y);
  nn::view(grads, w_head_).col(0) += dz * pooled.transpose();
  nn::view(grads, b_head_)(0, 0) += dz;
  const auto t = cache.hidden.rows();
  const nn::RowVector d_pooled = dz * nn::view(p, w_head_).col(0).transpose();
  nn::Matrix d_hidden = d_pooled.replicate(t, 1) / static_cast<double>(t);
  stack_.backward(params_, cache, d_hidden, grads);
  return loss;
}

EncoderClassifier enc_train(const LabeledSet& data, const Tokenizer& tok, const EncoderConfig& cfg,
                            EncoderTrainingLog* log) {
  cfg.validate();
  if (data.texts.size() != data.labels.size()) throw Error("texts and labels differ in length");
  const auto humans = std::count(data.labels.begin(), data.labels.end(), Label::human);
  if (humans == 0 || humans == static_cast<std::ptrdiff_t>(data.labels.size())) {
    throw Error("encoder training needs both classes");
  }
  EncoderTrainingLog local;
  EncoderTrainingLog& out = log ? *log : local;
  out = {};

  EncoderClassifier model(tok, encoder_arch(cfg, static_cast<int>(tok.size())), derive_seed(cfg.seed, 0xe4c0));
  std::vector<std::vector<TokenId>> seqs;
  seqs.reserve(data.size());
  for (const auto& t : data.texts) seqs.push_back(model.prepare(t));

  double init = 0.0;
  for (std::size_t i = 0; i < seqs.size(); ++i) init += model.loss_and_grad(seqs[i], data.labels[i], 0.0, {});
  out.initial_loss = init / static_cast<double>(seqs.size());

  nn::Adam opt(model.parameter_count(), cfg.learning_rate);
  nn::Buffer grads(model.parameter_count());
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, 0x0bde));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grads.begin(), grads.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        model.loss_and_grad(seqs[order[i]], data.labels[order[i]], scale, grads);
      }
      nn::clip_global_norm(grads, 1.0);
      opt.step(model.mutable_parameters(), grads);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < seqs.size(); ++i) total += model.loss_and_grad(seqs[i], data.labels[i], 0.0, {});
    out.epoch_loss.push_back(total / static_cast<double>(seqs.size()));
  }
  model.set_final_loss(out.epoch_loss.back());
  return model;
}

void save_encoder(const std::filesystem::path& path, const EncoderClassifier& m) {
  write_checkpoint(path, ModelKind::encoder_classifier, m.architecture(), 0, m.parameters());
}

EncoderClassifier load_encoder(const std::filesystem::path& path, const Tokenizer& tok) {
  Checkpoint c = read_checkpoint(path);
  if (c.kind != ModelKind::encoder_classifier) throw Error(path.string() + ": not an encoder checkpoint");
  return EncoderClassifier(tok, c.arch, std::move(c.parameters));
}

}  // namespace evl
