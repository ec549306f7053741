// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cases.hpp"
#include "evl/acceptability.hpp"
#include "evl/cli/commands.hpp"
#include "evl/cli/config.hpp"
#include "evl/corpus.hpp"
#include "evl/encoder.hpp"
#include "evl/experiment.hpp"
#include "evl/metrics.hpp"
#include "evl/lm.hpp"
#include "evl/naive_bayes.hpp"
#include "evl/rl.hpp"
#include "evl/sampling.hpp"
#include "evl/synth.hpp"
#include "evl/tokenizer.hpp"

using namespace evl;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

void note(const std::string& s) { std::cerr << "  " << s << std::endl; }

SamplingConfig with_min(SamplingConfig s) {
  s.min_new_tokens = 3;
  return s;
}

// Shared desk-scale setup: synthetic tweets, filtered, cut to 20k, split in half.
struct World {
  Corpus train, eval;
  Tokenizer tok;
  std::optional<LmPolicy> lm;
  std::vector<TokenSeq> pool;
  double seconds = 0.0;
};

World& world() {
  static World w = [] {
    const auto t0 = Clock::now();
    World w;
    Corpus kept = filter_pipeline(synthesize_tweets(25000, 7), FilterPolicy{});
    if (kept.size() > 20000) kept.records.resize(20000);
    auto split = split_corpus(kept, 0.5, 3);
    w.train = std::move(split.train);
    w.eval = std::move(split.eval);
    w.tok = build_vocab(w.train, 2000);
    LmTrainingLog log;
    w.lm = train_lm(w.train, w.tok, LmConfig{}, &log);
    w.pool = encode_all(w.tok, w.train.texts());
    w.seconds = since(t0);
    note("corpus " + std::to_string(kept.size()) + " records, vocab " + std::to_string(w.tok.size()) +
         ", lm holdout loss " + fmt(log.holdout_loss.front(), 3) + " -> " + fmt(log.holdout_loss.back(), 3) + " in " +
         fmt(w.seconds, 1) + "s");
    return w;
  }();
  return w;
}

// Detector pair trained once; criterion 8 attacks the encoder.
struct Detectors {
  std::optional<EncoderClassifier> enc;
  Metrics nb, encoder;
  double seconds = 0.0;
};

Detectors& detectors() {
  static Detectors d = [] {
    World& w = world();
    const auto t0 = Clock::now();
    const std::size_t n_train = 9000, n_eval = 1000;
    const SamplingConfig s = with_min(SamplingConfig::random());
    const Corpus fake_train = generate_corpus(*w.lm, w.tok, w.pool, PromptConfig{}, s, n_train, 11);
    const Corpus fake_eval = generate_corpus(*w.lm, w.tok, w.pool, PromptConfig{}, s, n_eval, 12);
    Corpus real_train = w.train, real_eval = w.eval;
    real_train.records.resize(n_train);
    real_eval.records.resize(n_eval);
    const auto sets = assemble_detection_sets(real_train, real_eval, fake_train, fake_eval, 5);
    Detectors d;
    d.nb = nb_detection(w.tok, sets.train, sets.eval);
    d.enc = enc_train(sets.train, w.tok, EncoderConfig{});
    std::vector<Label> pred;
    for (const auto& t : sets.eval.texts) pred.push_back(d.enc->classify(t));
    d.encoder = compute_metrics(pred, sets.eval.labels);
    d.seconds = since(t0);
    return d;
  }();
  return d;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Outcome reward_rules() {
  int bad = 0, n = 0;
  for (const auto& c : cases::reward_rule_cases()) {
    ++n;
    const double got = c.actual();
    if (!close(got, c.expected, 1e-9)) {
      ++bad;
      note("rule case " + c.name + ": got " + fmt(got, 12) + ", expected " + fmt(c.expected, 12));
    }
  }
  return {bad == 0, std::to_string(n - bad) + "/" + std::to_string(n) + " rule cases within 1e-9"};
}

Outcome combiner() {
  int bad = 0;
  const auto cs = cases::random_combine_cases(1000, 2024);
  for (const auto& c : cs) {
    if (combine(cases::as_scores(c.rules), c.logit, c.multiplier).final !=
        cases::combine_oracle(c.rules, c.logit, c.multiplier)) {
      ++bad;
    }
  }
  return {bad == 0, std::to_string(cs.size() - static_cast<std::size_t>(bad)) + "/1000 exact matches"};
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

Outcome sampling_filters() {
  int bad = 0, n = 0;
  for (const auto& c : cases::sampling_filter_cases()) {
    ++n;
    const auto got = c.actual();
    bool ok = got.size() == c.expected.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) ok = close(got[i], c.expected[i], 1e-9);
    if (!ok) {
      ++bad;
      note("filter case " + c.name + " mismatch");
    }
  }
  Rng rng(55);
  int identity_bad = 0, mono_bad = 0;
  const double taus[] = {0.5, 0.8, 1.0, 1.2, 1.4};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = 2 + rng.below(30);
    std::vector<double> logits(v);
    for (double& l : logits) l = 3.0 * rng.normal();
    // τ = 1 must reproduce the plain softmax
    std::vector<double> plain(v);
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i < v; ++i) z += (plain[i] = std::exp(logits[i] - m));
    const auto at_one = softmax_with_temperature(logits, 1.0);
    for (std::size_t i = 0; i < v; ++i) {
      if (!close(at_one[i], plain[i] / z, 1e-12)) {
        ++identity_bad;
        break;
      }
    }
    double prev = -1.0;
    for (double t : taus) {
      const double h = entropy(softmax_with_temperature(logits, t));
      if (h < prev - 1e-12) ++mono_bad;
      prev = h;
    }
  }
  const bool pass = bad == 0 && identity_bad == 0 && mono_bad == 0;
  return {pass, std::to_string(n - bad) + "/" + std::to_string(n) + " worked examples, " +
                    std::to_string(identity_bad) + " identity and " + std::to_string(mono_bad) +
                    " entropy-order violations over 100 distributions"};
}

double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

Outcome gradient_check() {
  nn::Architecture arch;
  arch.vocab_size = 40;
  arch.dim = 16;
  arch.layers = 2;
  arch.heads = 2;
  arch.context = 16;
  arch.causal = true;
  LmPolicy lm(arch, 3);
  Rng rng(8);
  for (double& w : lm.mutable_parameters()) w += 0.05 * rng.normal();
  std::vector<TokenId> seq;
  for (int i = 0; i < 12; ++i) seq.push_back(static_cast<TokenId>(4 + rng.below(36)));
  std::vector<double> grads(lm.parameter_count(), 0.0);
  const std::vector<double> coeff(seq.size() - 1, -1.0);
  lm.backward(lm.forward(seq), coeff, grads);
  const auto loss = [&] {
    double l = 0.0;
    for (double lp : lm.sequence_log_probs(seq)) l -= lp;
    return l;
  };
  double worst = 0.0;
  int checked = 0;
  const double h = 1e-5;
  while (checked < 5) {
    const std::size_t i = rng.below(lm.parameter_count());
    if (std::abs(grads[i]) < 1e-6) continue;
    auto p = lm.mutable_parameters();
    const double orig = p[i];
    p[i] = orig + h;
    const double up = loss();
    p[i] = orig - h;
    const double down = loss();
    p[i] = orig;
    const double e = rel_err((up - down) / (2 * h), grads[i]);
    note("lm parameter " + std::to_string(i) + " relative error " + sci(e));
    worst = std::max(worst, e);
    ++checked;
  }

  // the encoder shares the stack but has its own pooling and head
  Corpus words;
  words.records.push_back(TextRecord{});
  words.records.back().text = "a b c d e f";
  const Tokenizer tok = build_vocab(words, 20);
  arch.vocab_size = static_cast<int>(tok.size());
  arch.causal = false;
  EncoderClassifier enc(tok, arch, 4);
  for (double& w : enc.mutable_parameters()) w += 0.05 * rng.normal();
  const auto toks = enc.prepare("a c b f d e a");
  std::vector<double> eg(enc.parameter_count(), 0.0);
  enc.loss_and_grad(toks, Label::machine, 1.0, eg);
  checked = 0;
  while (checked < 5) {
    const std::size_t i = rng.below(enc.parameter_count());
    if (std::abs(eg[i]) < 1e-6) continue;
    auto p = enc.mutable_parameters();
    const double orig = p[i];
    p[i] = orig + h;
    const double up = enc.loss_and_grad(toks, Label::machine, 1.0, {});
    p[i] = orig - h;
    const double down = enc.loss_and_grad(toks, Label::machine, 1.0, {});
    p[i] = orig;
    const double e = rel_err((up - down) / (2 * h), eg[i]);
    note("encoder parameter " + std::to_string(i) + " relative error " + sci(e));
    worst = std::max(worst, e);
    ++checked;
  }
  return {worst <= 1e-3, "worst relative error " + sci(worst) + " over 5 lm + 5 encoder parameters"};
}

GridConfig nb_grid(std::vector<SamplingConfig> strategies, std::vector<std::size_t> sizes, std::uint64_t seed) {
  GridConfig g;
  g.strategies = std::move(strategies);
  g.temperatures = {1.0};
  g.train_sizes = std::move(sizes);
  g.eval_size = 1000;
  g.seed = seed;
  return g;
}

Outcome size_trend() {
  World& w = world();
  double acc1 = 0.0, acc5 = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rep = grid_experiment(*w.lm, w.tok, w.train, w.eval,
                                     nb_grid({with_min(SamplingConfig::random())}, {1000, 5000}, seed));
    for (const auto& r : rep.rows) {
      (r.train_size == 1000 ? acc1 : acc5) += r.accuracy / 3.0;
      note("seed " + std::to_string(seed) + " train " + std::to_string(r.train_size) + " accuracy " +
           fmt(r.accuracy));
    }
  }
  return {acc5 >= acc1 - 0.02, "NB accuracy 1k " + fmt(acc1) + ", 5k " + fmt(acc5) + " (3-seed mean)"};
}

Outcome strategy_order() {
  World& w = world();
  double greedy = 0.0, nucleus = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rep = grid_experiment(
        *w.lm, w.tok, w.train, w.eval,
        nb_grid({with_min(SamplingConfig::greedy()), with_min(SamplingConfig::nucleus(0.95))}, {5000}, seed));
    for (const auto& r : rep.rows) {
      (r.strategy == Strategy::greedy ? greedy : nucleus) += r.accuracy / 3.0;
      note("seed " + std::to_string(seed) + " " + std::string(to_string(r.strategy)) + " accuracy " +
           fmt(r.accuracy));
    }
  }
  return {greedy >= nucleus, "NB accuracy greedy " + fmt(greedy) + ", nucleus 0.95 " + fmt(nucleus) +
                                 " at tau 1.0 (3-seed mean)"};
}

Outcome encoder_quality() {
  Detectors& d = detectors();
  note("nb accuracy " + fmt(d.nb.accuracy) + ", encoder accuracy " + fmt(d.encoder.accuracy));
  return {d.encoder.f1 >= 0.85 && d.nb.f1 >= 0.60,
          "encoder F1 " + fmt(d.encoder.f1) + ", NB F1 " + fmt(d.nb.f1) + " on 1000+1000 held out"};
}

Outcome rl_evasion() {
  World& w = world();
  Detectors& d = detectors();
  const LmPolicy reference = w.lm->snapshot();
  const auto texts = w.train.texts();
  const std::vector<std::string> calib(texts.begin(), texts.begin() + 2000);
  const auto scorer = LmAcceptabilityScorer::calibrate(reference, w.tok, calib);
  const Dictionary dict = Dictionary::embedded();
  const RewardContext ctx{&w.tok, &*d.enc, &scorer, &dict, RewardConfig{}};
  const SamplingConfig s = with_min(SamplingConfig::random());
  const auto eval_texts = w.eval.texts();
  int dropped = 0;
  double worst_kl = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto t0 = Clock::now();
    RlConfig cfg;
    cfg.seed = seed;
    const RlRun run = rl_train(*w.lm, reference, w.pool, ctx, cfg, s);
    double kl = 0.0;
    for (const auto& st : run.trace.steps) kl = std::max(kl, st.mean_kl);
    worst_kl = std::max(worst_kl, kl);
    const auto r = pre_post_eval(*d.enc, w.tok, *w.lm, run.final_policy, eval_texts, w.pool, s, 0.5, 6, 500,
                                 derive_seed(seed, 0x9905));
    const double drop = r.f1_pre - r.f1_post;
    if (drop >= 0.3) ++dropped;
    note("seed " + std::to_string(seed) + ": F1 " + fmt(r.f1_pre) + " -> " + fmt(r.f1_post) + ", max step KL " +
         fmt(kl, 3) + ", " + fmt(since(t0), 1) + "s");
    detail += (detail.empty() ? "" : ", ") + fmt(r.f1_pre, 3) + "->" + fmt(r.f1_post, 3);
  }
  return {dropped >= 2 && worst_kl < 15.0, std::to_string(dropped) + "/3 seeds drop >= 0.3 (" + detail +
                                               "), max per-step mean KL " + fmt(worst_kl, 3)};
}

cli::RunConfig pipeline_config(const std::filesystem::path& corpus, const std::filesystem::path& workdir) {
  cli::RunConfig c;
  c.seed = 11;
  c.corpus = corpus;
  c.workdir = workdir;
  c.max_records = 2000;
  c.vocab_size = 600;
  c.lm.embedding_dim = 32;
  c.lm.layers = 1;
  c.lm.epochs = 1;
  c.generate_train = 400;
  c.generate_eval = 200;
  c.detector.dim = 32;
  c.detector.layers = 1;
  c.detector.heads = 2;
  c.detector.epochs = 1;
  c.calibration_texts = 200;
  c.rl.steps = 5;
  c.rl_eval_samples = 100;
  c.report_temperatures = {0.8, 1.0};
  c.report_strategies = {Strategy::greedy, Strategy::random, Strategy::nucleus};
  c.report_train_sizes = {100, 300};
  c.report_eval_size = 200;
  c.qq_quantiles = 10;
  c.report_model_sizes = {{16, 1}};
  c.finalize();
  return c;
}

std::map<std::string, std::string> tsv_files(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".tsv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "evl-acceptance-determinism";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  cli::cmd_synth(root / "raw.jsonl", 3000, 5);
  std::ostringstream log;
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"a", "b"}) {
    const auto cfg = pipeline_config(root / "raw.jsonl", root / name);
    cli::cmd_filter(cfg, log);
    cli::cmd_train_lm(cfg, log);
    cli::cmd_generate(cfg, log);
    cli::cmd_train_detector(cfg, log);
    cli::cmd_evaluate(cfg, log);
    cli::cmd_rl_tune(cfg, log);
    cli::cmd_report(cfg, log);
    runs.push_back(tsv_files(root / name));
  }
  std::filesystem::remove_all(root);
  std::size_t differ = 0;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) {
      ++differ;
      note(name + " differs between runs");
    }
  }
  const bool pass = differ == 0 && runs[0].size() == runs[1].size() && runs[0].size() >= 5;
  return {pass, std::to_string(runs[0].size()) + " TSV files compared, " + std::to_string(differ) + " differ"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "reward-rule exactness", 1.0, reward_rules},
      {2, "combiner oracle equivalence", 1.0, combiner},
      {3, "sampling filter correctness", 5.0, sampling_filters},
      {4, "gradient check", 30.0, gradient_check},
      {5, "shallow-detector size trend", 300.0, size_trend},
      {6, "sampling-scheme ordering", 300.0, strategy_order},
      {7, "transformer-detector quality", 600.0, encoder_quality},
      {8, "RL evasion", 1800.0, rl_evasion},
      {9, "determinism", 600.0, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    // shared setup is charged to the first criterion that needs it
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = since(t0);
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << "criterion " << c.id << " " << c.name << ": " << (pass ? "PASS" : "FAIL") << " (" << o.detail
              << "; " << fmt(secs, 1) << "s of " << fmt(c.budget_seconds, 0) << "s"
              << (in_time ? "" : ", over budget") << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
