#pragma once

#include <cstddef>
#include <cstdint>

#include "evl/corpus.hpp"

namespace evl {

// Deterministic generator of tweet-like human records in the ingestion
// schema. Texts follow a topic-consistent template grammar (subject,
// hashtags and emojis agree on the topic); metadata is drawn so that
// roughly four in five records pass the default FilterPolicy.
struct SynthOptions {
  std::size_t author_count = 4000;
  std::int64_t start_time = 1577836800;  // 2020-01-01T00:00:00Z
  std::int64_t span_seconds = 60LL * 24 * 3600;
};

Corpus synthesize_tweets(std::size_t count, std::uint64_t seed, const SynthOptions& opt = {});

}  // namespace evl
