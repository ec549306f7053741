#pragma once

#include <span>
#include <string>
#include <string_view>

#include "evl/lm.hpp"
#include "evl/tokenizer.hpp"

namespace evl {

// Graded grammaticality judgment in [0, 1].
class AcceptabilityScorer {
 public:
  virtual ~AcceptabilityScorer() = default;
  virtual double acceptability(std::string_view text) const = 0;
};

// Logistic map of the reference model's mean per-token log-probability,
// centred so that the median calibration text scores `anchor`.
class LmAcceptabilityScorer : public AcceptabilityScorer {
 public:
  LmAcceptabilityScorer(LmPolicy reference, Tokenizer tok, double median, double spread, double anchor = 0.7);

  static LmAcceptabilityScorer calibrate(const LmPolicy& reference, const Tokenizer& tok,
                                         std::span<const std::string> texts, double anchor = 0.7);

  double mean_log_prob(std::string_view text) const;
  double acceptability(std::string_view text) const override;

  double median() const { return median_; }
  double spread() const { return spread_; }

 private:
  LmPolicy ref_;
  Tokenizer tok_;
  double median_;
  double spread_;
  double anchor_logit_;
};

}  // namespace evl
