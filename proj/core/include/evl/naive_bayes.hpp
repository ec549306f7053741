#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evl/corpus.hpp"
#include "evl/tokenizer.hpp"

namespace evl {

using BowVector = std::map<TokenId, int>;

// Counts of non-special tokens; out-of-vocabulary pieces count under UNK.
BowVector bow_featurize(const Tokenizer& tok, std::string_view text);
std::vector<BowVector> bow_featurize(const Tokenizer& tok, std::span<const std::string> texts);

// Multinomial Naive Bayes over a feature space of `features` token ids.
struct NbModel {
  double alpha = 1.0;
  std::array<double, 2> log_prior{};                   // indexed by Label
  std::array<std::vector<double>, 2> log_likelihood;  // indexed by Label, then token id

  std::size_t feature_count() const { return log_likelihood[0].size(); }
};

struct NbPrediction {
  Label label = Label::human;
  double p_human = 0.5;
  double p_machine = 0.5;
};

NbModel nb_train(std::span<const BowVector> docs, std::span<const Label> labels, std::size_t features,
                 double alpha = 1.0);
NbPrediction nb_predict(const NbModel& m, const BowVector& doc);
std::vector<NbPrediction> nb_predict(const NbModel& m, std::span<const BowVector> docs);

}  // namespace evl
