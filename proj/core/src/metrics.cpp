#include "evl/metrics.hpp"

#include "evl/error.hpp"

namespace evl {

Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) throw Error("predictions and labels differ in length");
  if (labels.empty()) throw Error("cannot compute metrics on an empty set");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == Label::machine;
    const bool gold = labels[i] == Label::machine;
    if (pred && gold) ++m.tp;
    else if (pred) ++m.fp;
    else if (gold) ++m.fn;
    else ++m.tn;
  }
  const auto d = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  m.accuracy = d(m.tp + m.tn, labels.size());
  m.precision = d(m.tp, m.tp + m.fp);
  m.recall = d(m.tp, m.tp + m.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace evl
