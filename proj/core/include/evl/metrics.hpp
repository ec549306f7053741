#pragma once

#include <cstddef>
#include <span>

#include "evl/corpus.hpp"

namespace evl {

// Machine is the positive class.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> labels);

}  // namespace evl
