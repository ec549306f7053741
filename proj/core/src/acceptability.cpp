#include "evl/acceptability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "evl/error.hpp"

namespace evl {

LmAcceptabilityScorer::LmAcceptabilityScorer(LmPolicy reference, Tokenizer tok, double median, double spread,
                                             double anchor)
    : ref_(reference.frozen() ? std::move(reference) : reference.snapshot()),
      tok_(std::move(tok)),
      median_(median),
      spread_(spread) {
  if (!(spread > 0.0) || !std::isfinite(median)) throw ConfigError("acceptability calibration must be finite with positive spread");
  if (!(anchor > 0.0 && anchor < 1.0)) throw ConfigError("acceptability anchor must lie in (0, 1)");
  anchor_logit_ = std::log(anchor / (1.0 - anchor));
}

double LmAcceptabilityScorer::mean_log_prob(std::string_view text) const {
  auto ids = tok_.encode(text);
  if (ids.size() > static_cast<std::size_t>(ref_.context_len())) ids.resize(static_cast<std::size_t>(ref_.context_len()));
  const auto lp = ref_.sequence_log_probs(ids);
  return std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

double LmAcceptabilityScorer::acceptability(std::string_view text) const {
  const double m = mean_log_prob(text);
  if (!std::isfinite(m)) throw Error("acceptability scorer produced a non-finite score");
  const double z = anchor_logit_ + (m - median_) / spread_;
  return 1.0 / (1.0 + std::exp(-z));
}

LmAcceptabilityScorer LmAcceptabilityScorer::calibrate(const LmPolicy& reference, const Tokenizer& tok,
                                                       std::span<const std::string> texts, double anchor) {
  if (texts.empty()) throw Error("acceptability calibration needs at least one text");
  LmAcceptabilityScorer probe(reference, tok, 0.0, 1.0, anchor);
  std::vector<double> m;
  m.reserve(texts.size());
  for (const auto& t : texts) m.push_back(probe.mean_log_prob(t));
  std::vector<double> sorted = m;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : m) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / static_cast<double>(n));
  if (!(sd > 1e-6)) sd = 1.0;
  return LmAcceptabilityScorer(probe.ref_, tok, median, sd, anchor);
}

}  // namespace evl
