#include "evl/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>

#include "evl/acceptability.hpp"
#include "evl/checkpoint.hpp"
#include "evl/dictionary.hpp"
#include "evl/encoder.hpp"
#include "evl/error.hpp"
#include "evl/experiment.hpp"
#include "evl/metrics.hpp"
#include "evl/synth.hpp"
#include "evl/tokenizer.hpp"

namespace evl::cli {

namespace fs = std::filesystem;

std::filesystem::path Artifacts::file(std::string_view stem, std::string_view ext) const {
  return dir / (std::string(stem) + "-s" + std::to_string(seed) + "." + std::string(ext));
}

Artifacts artifacts(const RunConfig& cfg) { return Artifacts{cfg.workdir, cfg.seed}; }

namespace {

const fs::path& require(const fs::path& p, std::string_view producer) {
  if (!fs::exists(p)) {
    throw Error("missing prerequisite artifact " + p.string() + " (run `evl " + std::string(producer) + "` first)");
  }
  return p;
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  body(out);
  out.flush();
  if (!out) throw Error("failed writing " + p.string());
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Validates, creates the workdir and echoes the effective config.
Artifacts prepare(const RunConfig& cfg) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  fs::create_directories(a.dir);
  write_file(a.config(), [&](std::ostream& out) {
    out << "# config_hash=" << config_hash(cfg) << '\n';
    write_config(out, cfg);
  });
  return a;
}

void write_report(const fs::path& p, const RunConfig& cfg, const std::function<void(std::ostream&)>& body) {
  write_file(p, [&](std::ostream& out) {
    out << "# config_hash=" << config_hash(cfg) << '\n';
    body(out);
  });
}

Corpus load_as(const fs::path& p, Label l, std::string_view producer) { return load_records(require(p, producer), l); }

Tokenizer load_vocab(const Artifacts& a) { return Tokenizer::load(require(a.vocab(), "train-lm")); }

Dictionary load_dictionary(const RunConfig& cfg) {
  return cfg.dictionary.empty() ? Dictionary::embedded() : Dictionary::load(cfg.dictionary);
}

std::vector<std::string> head_texts(const Corpus& c, std::size_t n) {
  auto t = c.texts();
  if (t.size() > n) t.resize(n);
  return t;
}

void write_metrics_row(std::ostream& out, std::string_view name, const Metrics& m) {
  out << name << '\t' << num(m.accuracy) << '\t' << num(m.precision) << '\t' << num(m.recall) << '\t' << num(m.f1)
      << '\t' << m.tp << '\t' << m.fp << '\t' << m.fn << '\t' << m.tn << '\n';
}

}  // namespace

void cmd_filter(const RunConfig& cfg, std::ostream& log, std::optional<Label> label_override) {
  const Artifacts a = prepare(cfg);
  const Corpus raw = load_records(cfg.corpus, label_override);
  Corpus kept = filter_pipeline(raw, cfg.filter);
  if (cfg.max_records > 0 && kept.size() > cfg.max_records) kept.records.resize(cfg.max_records);
  write_records(a.filtered(), kept);
  write_file(a.filter_stats(), [&](std::ostream& out) {
    out << "input_records = " << raw.size() << '\n';
    write_stats_report(out, corpus_stats(kept));
  });
  const CorpusSplit split = split_corpus(kept, cfg.split_ratio, derive_seed(cfg.seed, 0x5b17));
  write_records(a.human_train(), split.train);
  write_records(a.human_eval(), split.eval);
  log << "filter: " << raw.size() << " -> " << kept.size() << " records (" << split.train.size() << " train, "
      << split.eval.size() << " eval)\n";
}

void cmd_train_lm(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a = prepare(cfg);
  const Corpus train = load_as(a.human_train(), Label::human, "filter");
  const Tokenizer tok = build_vocab(train, cfg.vocab_size);
  LmTrainingLog tl;
  const LmPolicy lm = train_lm(train, tok, cfg.lm, &tl);
  for (const auto& w : tl.warnings) log << "train-lm: warning: " << w << '\n';
  tok.save(a.vocab());
  save_lm(a.lm(), lm);
  write_file(a.lm_loss(), [&](std::ostream& out) {
    out << "epoch\ttrain_loss\tholdout_loss\n";
    for (std::size_t e = 0; e < tl.holdout_loss.size(); ++e) {
      out << e << '\t' << (e == 0 ? std::string("nan") : num(tl.train_loss[e - 1])) << '\t' << num(tl.holdout_loss[e])
          << '\n';
    }
  });
  log << "train-lm: vocab " << tok.size() << ", holdout loss " << num(tl.holdout_loss.front(), 3) << " -> "
      << num(tl.holdout_loss.back(), 3) << '\n';
}

void cmd_generate(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a = prepare(cfg);
  const Corpus train = load_as(a.human_train(), Label::human, "filter");
  const Tokenizer tok = load_vocab(a);
  const LmPolicy lm = load_lm(require(a.lm(), "train-lm"));
  const auto pool = encode_all(tok, train.texts());
  const Corpus fake_train =
      generate_corpus(lm, tok, pool, cfg.prompts, cfg.sampling, cfg.generate_train, derive_seed(cfg.seed, 0x6e01));
  const Corpus fake_eval =
      generate_corpus(lm, tok, pool, cfg.prompts, cfg.sampling, cfg.generate_eval, derive_seed(cfg.seed, 0x6e02));
  write_records(a.fake_train(), fake_train);
  write_records(a.fake_eval(), fake_eval);
  log << "generate: " << fake_train.size() << " train, " << fake_eval.size() << " eval samples ("
      << to_string(cfg.sampling.strategy) << ", temperature " << num(cfg.sampling.temperature, 2) << ")\n";
}

namespace {

DetectionSets detection_sets(const RunConfig& cfg, const Artifacts& a) {
  const Corpus fake_train = load_as(a.fake_train(), Label::machine, "generate");
  const Corpus fake_eval = load_as(a.fake_eval(), Label::machine, "generate");
  const Corpus real_train = load_as(a.human_train(), Label::human, "filter");
  const Corpus real_eval = load_as(a.human_eval(), Label::human, "filter");
  return assemble_detection_sets(real_train, real_eval, fake_train, fake_eval, derive_seed(cfg.seed, 0xde7));
}

}  // namespace

void cmd_train_detector(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a = prepare(cfg);
  const DetectionSets sets = detection_sets(cfg, a);
  const Tokenizer tok = load_vocab(a);
  EncoderTrainingLog tl;
  const EncoderClassifier enc = enc_train(sets.train, tok, cfg.detector, &tl);
  save_encoder(a.detector(), enc);
  write_file(a.detector_loss(), [&](std::ostream& out) {
    out << "epoch\tloss\n0\t" << num(tl.initial_loss) << '\n';
    for (std::size_t e = 0; e < tl.epoch_loss.size(); ++e) out << e + 1 << '\t' << num(tl.epoch_loss[e]) << '\n';
  });
  log << "train-detector: " << sets.train.size() << " examples, loss " << num(tl.initial_loss, 4) << " -> "
      << num(enc.final_loss(), 4) << '\n';
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a = prepare(cfg);
  const DetectionSets sets = detection_sets(cfg, a);
  const Tokenizer tok = load_vocab(a);
  const EncoderClassifier enc = load_encoder(require(a.detector(), "train-detector"), tok);
  const Metrics nb = nb_detection(tok, sets.train, sets.eval);
  std::vector<Label> pred;
  pred.reserve(sets.eval.size());
  for (const auto& t : sets.eval.texts) pred.push_back(enc.classify(t));
  const Metrics em = compute_metrics(pred, sets.eval.labels);
  write_report(a.detection(), cfg, [&](std::ostream& out) {
    out << "detector\taccuracy\tprecision\trecall\tf1\ttp\tfp\tfn\ttn\n";
    write_metrics_row(out, "naive_bayes", nb);
    write_metrics_row(out, "encoder", em);
  });
  log << "evaluate: naive_bayes f1 " << num(nb.f1, 4) << ", encoder f1 " << num(em.f1, 4) << '\n';
}

void cmd_rl_tune(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a = prepare(cfg);
  const Corpus train = load_as(a.human_train(), Label::human, "filter");
  const Tokenizer tok = load_vocab(a);
  const LmPolicy lm = load_lm(require(a.lm(), "train-lm"));
  const EncoderClassifier enc = load_encoder(require(a.detector(), "train-detector"), tok);
  const Dictionary dict = load_dictionary(cfg);
  const auto calib = head_texts(train, cfg.calibration_texts);
  const auto scorer = LmAcceptabilityScorer::calibrate(lm, tok, calib, cfg.acceptability_anchor);
  const LmPolicy ref = lm.snapshot();
  const auto pool = encode_all(tok, train.texts());
  const RewardContext ctx{&tok, &enc, &scorer, &dict, cfg.reward};

  std::ofstream rl_log(a.rl_log(), std::ios::binary);
  std::ofstream rewards(a.rl_rewards(), std::ios::binary);
  if (!rl_log || !rewards) throw Error("cannot write rl logs in " + a.dir.string());
  write_rl_log_header(rl_log);
  rewards << "step\t";
  write_reward_log_header(rewards);
  const int every = std::max(1, cfg.rl.steps / 10);
  const auto observer = [&](int step, const RolloutBatch& batch, const PpoStats& s) {
    write_rl_log_row(rl_log, step, s);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      rewards << step << '\t';
      write_reward_log_row(rewards, batch.query_texts[i], batch.response_texts[i], batch.rewards[i].final);
    }
    if (step % every == 0 || step + 1 == cfg.rl.steps) {
      log << "rl-tune: step " << step << " reward " << num(s.mean_reward, 3) << " kl " << num(s.mean_kl, 3) << '\n';
    }
  };
  const RlRun run = rl_train(lm, ref, pool, ctx, cfg.rl, cfg.sampling, observer);
  save_lm(a.policy(), run.final_policy);
  save_lm(a.policy_best(), run.best_policy);
  log << "rl-tune: best mean reward at step " << run.trace.best_step << '\n';
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
  const Artifacts a = prepare(cfg);
  const Corpus train = load_as(a.human_train(), Label::human, "filter");
  const Corpus eval = load_as(a.human_eval(), Label::human, "filter");
  const Corpus fake_eval = load_as(a.fake_eval(), Label::machine, "generate");
  const Tokenizer tok = load_vocab(a);
  const LmPolicy lm = load_lm(require(a.lm(), "train-lm"));
  const EncoderClassifier enc = load_encoder(require(a.detector(), "train-detector"), tok);
  const LmPolicy policy = load_lm(require(a.policy(), "rl-tune"));
  const LmPolicy best = load_lm(require(a.policy_best(), "rl-tune"));

  // sampling strategies by temperature and training size
  GridConfig grid;
  grid.temperatures = cfg.report_temperatures;
  for (Strategy s : cfg.report_strategies) grid.strategies.push_back(sampling_for(cfg, s));
  grid.train_sizes = cfg.report_train_sizes;
  grid.eval_size = cfg.report_eval_size;
  grid.prompts = cfg.prompts;
  grid.seed = derive_seed(cfg.seed, 0x671d);
  const ExperimentReport rep = grid_experiment(lm, tok, train, eval, grid);
  const std::size_t largest = *std::max_element(grid.train_sizes.begin(), grid.train_sizes.end());
  ExperimentReport by_temp;
  for (const auto& row : rep.rows) {
    if (row.train_size == largest) by_temp.rows.push_back(row);
  }
  write_report(a.report_temperature(), cfg, [&](std::ostream& out) { write_report_tsv(out, by_temp); });
  write_report(a.report_sizes(), cfg, [&](std::ostream& out) { write_report_tsv(out, rep); });
  log << "report: detection grid with " << rep.rows.size() << " rows\n";

  const auto eval_texts = eval.texts();
  const auto fake_texts = fake_eval.texts();
  const auto qq = qq_quantiles(eval_texts, fake_texts, cfg.qq_quantiles);
  write_report(a.report_qq(), cfg, [&](std::ostream& out) { write_qq_tsv(out, qq); });

  // generator size against detection accuracy
  std::vector<ModelSize> sizes{{cfg.lm.embedding_dim, cfg.lm.layers}};
  for (const auto& m : cfg.report_model_sizes) {
    if (std::find(sizes.begin(), sizes.end(), m) == sizes.end()) sizes.push_back(m);
  }
  GridConfig model_grid = grid;
  model_grid.strategies = {cfg.sampling};
  model_grid.train_sizes = {largest};
  write_report(a.report_models(), cfg, [&](std::ostream& out) {
    out << "embedding_dim\tlayers\tparameters\ttemperature\taccuracy\tf1\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      LmPolicy gen = lm;
      if (i > 0) {
        LmConfig lc = cfg.lm;
        lc.embedding_dim = sizes[i].embedding_dim;
        lc.layers = sizes[i].layers;
        gen = train_lm(train, tok, lc);
      }
      const ExperimentReport r = grid_experiment(gen, tok, train, eval, model_grid);
      for (const auto& row : r.rows) {
        out << sizes[i].embedding_dim << '\t' << sizes[i].layers << '\t' << gen.parameter_count() << '\t'
            << num(row.temperature, 2) << '\t' << num(row.accuracy) << '\t' << num(row.f1) << '\n';
      }
      log << "report: generator " << sizes[i].embedding_dim << "x" << sizes[i].layers << " done\n";
    }
  });

  const auto pool = encode_all(tok, train.texts());
  const std::size_t n = std::min(cfg.rl_eval_samples, eval_texts.size());
  write_report(a.report_prepost(), cfg, [&](std::ostream& out) {
    out << "pre\tpost\tf1_pre\tf1_post\taccuracy_pre\taccuracy_post\n";
    const std::pair<const char*, const LmPolicy*> posts[] = {{"policy", &policy}, {"policy-best", &best}};
    for (const auto& [name, post] : posts) {
      const PrePostResult r = pre_post_eval(enc, tok, lm, *post, eval_texts, pool, cfg.sampling,
                                            cfg.prompts.prefix_probability, cfg.prompts.max_prefix_tokens, n,
                                            derive_seed(cfg.seed, 0x9905));
      out << "lm\t" << name << '\t' << num(r.f1_pre) << '\t' << num(r.f1_post) << '\t' << num(r.accuracy_pre) << '\t'
          << num(r.accuracy_post) << '\n';
      log << "report: detector f1 " << num(r.f1_pre, 3) << " before, " << num(r.f1_post, 3) << " after (" << name
          << ")\n";
    }
  });
}

void cmd_synth(const std::filesystem::path& out, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("synth count must be positive");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_records(out, synthesize_tweets(count, seed));
}

}  // namespace evl::cli
