#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "evl/acceptability.hpp"
#include "evl/corpus.hpp"
#include "evl/encoder.hpp"
#include "evl/lm.hpp"
#include "evl/naive_bayes.hpp"
#include "evl/reward.hpp"
#include "evl/rng.hpp"
#include "evl/sampling.hpp"
#include "evl/synth.hpp"
#include "evl/tokenizer.hpp"

using namespace evl;

namespace {

struct Setup {
  Corpus corpus = filter_pipeline(synthesize_tweets(3000, 1), FilterPolicy{});
  Tokenizer tok = build_vocab(corpus, 2000);
  std::vector<std::vector<TokenId>> seqs = encode_all(tok, corpus.texts());
};

const Setup& setup() {
  static const Setup s;
  return s;
}

LmPolicy make_lm(int dim, int layers) {
  LmConfig c;
  c.embedding_dim = dim;
  c.layers = layers;
  return LmPolicy(c.architecture(static_cast<int>(setup().tok.size())), 1);
}

void BM_LmForwardBackward(benchmark::State& state) {
  const LmPolicy lm = make_lm(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto& seq = setup().seqs[0];
  std::vector<TokenId> s(seq.begin(), seq.begin() + std::min<std::size_t>(seq.size(), 48));
  nn::Buffer grads(lm.parameter_count());
  const std::vector<double> coeff(s.size() - 1, -1.0);
  for (auto _ : state) {
    const auto pass = lm.forward(s);
    lm.backward(pass, coeff, grads);
    benchmark::DoNotOptimize(grads.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_LmForwardBackward)->Args({32, 1})->Args({64, 2})->Args({128, 2});

void BM_Generate(benchmark::State& state) {
  const LmPolicy lm = make_lm(64, 2);
  SamplingConfig cfg = SamplingConfig::nucleus(0.95);
  cfg.max_new_tokens = 32;
  cfg.min_new_tokens = 32;
  const std::vector<TokenId> prefix{Tokenizer::kBos};
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(generate(lm, prefix, cfg, rng));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Generate);

void BM_NaiveBayes(benchmark::State& state) {
  const auto& s = setup();
  const auto texts = s.corpus.texts();
  const auto docs = bow_featurize(s.tok, texts);
  std::vector<Label> labels;
  for (std::size_t i = 0; i < docs.size(); ++i) labels.push_back(i % 2 ? Label::human : Label::machine);
  for (auto _ : state) {
    const NbModel m = nb_train(docs, labels, s.tok.size());
    benchmark::DoNotOptimize(nb_predict(m, docs));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs.size()));
}
BENCHMARK(BM_NaiveBayes);

struct ConstLogit : LogitScorer {
  double logit(std::string_view) const override { return 0.5; }
};

void BM_RewardBatch(benchmark::State& state) {
  const auto& s = setup();
  const LmPolicy lm = make_lm(32, 1);
  const auto texts = s.corpus.texts();
  const std::vector<std::string> calib(texts.begin(), texts.begin() + 200);
  const auto scorer = LmAcceptabilityScorer::calibrate(lm, s.tok, calib);
  const Dictionary dict = Dictionary::embedded();
  std::vector<RewardInput> batch;
  for (std::size_t i = 0; i < 16; ++i) {
    RewardInput in;
    in.response = in.text = texts[i];
    in.tokens = s.tok.encode_pieces(texts[i]);
    batch.push_back(std::move(in));
  }
  const ConstLogit det;
  for (auto _ : state) benchmark::DoNotOptimize(score_batch(batch, det, RewardConfig{}, scorer, dict));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_RewardBatch);

}  // namespace

BENCHMARK_MAIN();
