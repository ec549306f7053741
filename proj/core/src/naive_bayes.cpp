#include "evl/naive_bayes.hpp"

#include <cmath>

#include "evl/error.hpp"

namespace evl {

namespace {
std::size_t idx(Label l) { return static_cast<std::size_t>(l); }
}  // namespace

BowVector bow_featurize(const Tokenizer& tok, std::string_view text) {
  BowVector v;
  for (TokenId id : tok.encode_pieces(text)) {
    if (id == Tokenizer::kUnk || !Tokenizer::is_special(id)) ++v[id];
  }
  return v;
}

std::vector<BowVector> bow_featurize(const Tokenizer& tok, std::span<const std::string> texts) {
  std::vector<BowVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(bow_featurize(tok, t));
  return out;
}

NbModel nb_train(std::span<const BowVector> docs, std::span<const Label> labels, std::size_t features,
                 double alpha) {
  if (docs.size() != labels.size()) throw Error("documents and labels differ in length");
  if (!(alpha > 0.0)) throw ConfigError("smoothing alpha must be positive");
  if (features == 0) throw Error("feature space is empty");
  std::array<std::size_t, 2> doc_count{};
  std::array<std::vector<double>, 2> counts{std::vector<double>(features, 0.0),
                                            std::vector<double>(features, 0.0)};
  std::array<double, 2> totals{};
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto c = idx(labels[i]);
    ++doc_count[c];
    for (const auto& [id, n] : docs[i]) {
      if (id < 0 || static_cast<std::size_t>(id) >= features) throw Error("token id outside the feature space");
      counts[c][static_cast<std::size_t>(id)] += n;
      totals[c] += n;
    }
  }
  if (doc_count[0] == 0 || doc_count[1] == 0) throw Error("both classes need at least one document");

  NbModel m;
  m.alpha = alpha;
  const double n_docs = static_cast<double>(docs.size());
  for (std::size_t c = 0; c < 2; ++c) {
    m.log_prior[c] = std::log(static_cast<double>(doc_count[c]) / n_docs);
    const double denom = std::log(totals[c] + alpha * static_cast<double>(features));
    m.log_likelihood[c].resize(features);
    for (std::size_t j = 0; j < features; ++j) m.log_likelihood[c][j] = std::log(counts[c][j] + alpha) - denom;
  }
  return m;
}

NbPrediction nb_predict(const NbModel& m, const BowVector& doc) {
  std::array<double, 2> score = m.log_prior;
  for (const auto& [id, n] : doc) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.feature_count()) continue;
    for (std::size_t c = 0; c < 2; ++c) score[c] += n * m.log_likelihood[c][static_cast<std::size_t>(id)];
  }
  const double hi = std::max(score[0], score[1]);
  const double lse = hi + std::log(std::exp(score[0] - hi) + std::exp(score[1] - hi));
  NbPrediction p;
  p.p_human = std::exp(score[0] - lse);
  p.p_machine = std::exp(score[1] - lse);
  p.label = score[1] > score[0] ? Label::machine : Label::human;
  return p;
}

std::vector<NbPrediction> nb_predict(const NbModel& m, std::span<const BowVector> docs) {
  std::vector<NbPrediction> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(nb_predict(m, d));
  return out;
}

}  // namespace evl
