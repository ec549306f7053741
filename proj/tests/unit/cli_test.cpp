#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "evl/cli/commands.hpp"
#include "evl/cli/config.hpp"
#include "evl/error.hpp"
#include "evl/synth.hpp"
#include "fixtures.hpp"

using namespace evl;
using namespace evl::cli;
using namespace evl::testing;

namespace {

RunConfig parse(const std::string& s) {
  std::istringstream in(s);
  RunConfig c = parse_config(in);
  c.finalize();
  return c;
}

// Small enough to run every stage in a few seconds.
RunConfig tiny_run(const std::filesystem::path& dir) {
  RunConfig c;
  c.corpus = dir / "raw.jsonl";
  c.workdir = dir / "run";
  c.max_records = 600;
  c.vocab_size = 400;
  c.lm.embedding_dim = 16;
  c.lm.layers = 1;
  c.lm.epochs = 1;
  c.generate_train = 100;
  c.generate_eval = 100;
  c.detector.dim = 16;
  c.detector.layers = 1;
  c.detector.heads = 2;
  c.detector.epochs = 1;
  c.calibration_texts = 50;
  c.rl.steps = 2;
  c.rl.rollout_batch = 4;
  c.rl_eval_samples = 100;
  c.report_temperatures = {1.0};
  c.report_strategies = {Strategy::greedy};
  c.report_train_sizes = {50};
  c.report_eval_size = 50;
  c.qq_quantiles = 5;
  c.finalize();
  return c;
}

int run_evl(const std::string& args) {
  const std::string cmd = std::string(EVL_BINARY) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string run_evl_stderr(const std::string& args, const std::filesystem::path& scratch) {
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string(EVL_BINARY) + " " + args + " >/dev/null 2>" + err.string();
  if (std::system(cmd.c_str()) == -1) return {};
  return read_text(err);
}

}  // namespace

TEST(Config, DefaultsValidateAndRoundTrip) {
  RunConfig c;
  c.finalize();
  EXPECT_NO_THROW(c.validate());
  const std::string text = config_text(c);
  std::istringstream in(text);
  RunConfig back = parse_config(in);
  back.finalize();
  EXPECT_EQ(config_text(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Config, SamplingAndRewardRoundTrip) {
  const RunConfig c = parse(
      "seed = 4\n[sampling]\nstrategy = nucleus\np = 0.9\ntemperature = 0.8\n"
      "[reward]\nacceptability_threshold = 0.3\nmultiplier = 10\n[report]\nmodel_sizes = 32x1, 64x2\n");
  EXPECT_EQ(c.sampling.strategy, Strategy::nucleus);
  EXPECT_EQ(c.sampling.p, 0.9);
  EXPECT_FALSE(c.sampling.k.has_value());
  EXPECT_EQ(c.reward.acceptability_threshold, 0.3);
  EXPECT_EQ(c.reward.multiplier, 10.0);
  ASSERT_EQ(c.report_model_sizes.size(), 2u);
  EXPECT_EQ(c.report_model_sizes[1], (ModelSize{64, 2}));
  EXPECT_EQ(c.rl.seed, 4u);
  const RunConfig again = parse(config_text(c));
  EXPECT_EQ(config_text(again), config_text(c));
}

TEST(Config, StrategyDefaultsFilledIn) {
  EXPECT_EQ(parse("[sampling]\nstrategy = top_k\n").sampling.k, 100);
  EXPECT_EQ(parse("[sampling]\nstrategy = typical\n").sampling.p, 0.95);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse("[lm]\nwidth = 3\n"), ConfigError);
  EXPECT_THROW(parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("[lm]\nlayers = two\n"), ConfigError);
  EXPECT_THROW(parse("[sampling]\nstrategy = beam\n"), ConfigError);
  EXPECT_THROW(parse("[sampling]\nstrategy = greedy\nk = 5\n").validate(), ConfigError);
  EXPECT_THROW(parse("[rl]\nmini_batch = 32\n").validate(), ConfigError);
  EXPECT_THROW(parse("[filter]\nrequire_verified = maybe\n"), ConfigError);
  EXPECT_THROW(parse("[report]\nmodel_sizes = 32\n"), ConfigError);
  EXPECT_THROW(parse("[lm\n"), ConfigError);
}

TEST(Config, OverridesAndOptionalThresholds) {
  RunConfig c;
  apply_override(c, "sampling.temperature=1.4");
  apply_override(c, "filter.max_followers=none");
  apply_override(c, "seed=9");
  EXPECT_EQ(c.sampling.temperature, 1.4);
  EXPECT_FALSE(c.filter.max_followers.has_value());
  EXPECT_EQ(c.seed, 9u);
  EXPECT_THROW(apply_override(c, "sampling.temperature"), ConfigError);
  EXPECT_THROW(apply_override(c, "nope.key=1"), ConfigError);
}

TEST(Config, HashIgnoresWorkdirOnly) {
  RunConfig a, b;
  b.workdir = "/somewhere/else";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Commands, FilterEmptyInput) {
  TempDir d("cli-empty");
  RunConfig c = tiny_run(d.path());
  write_text(c.corpus, "");
  std::ostringstream log;
  cmd_filter(c, log);
  const Artifacts a = artifacts(c);
  EXPECT_EQ(read_text(a.filtered()), "");
  EXPECT_NE(read_text(a.filter_stats()).find("input_records = 0"), std::string::npos);
  EXPECT_NE(read_text(a.config()).find("# config_hash="), std::string::npos);
}

TEST(Commands, FilterIsIdempotentOnItsOutput) {
  TempDir d("cli-idem");
  RunConfig c = tiny_run(d.path());
  write_records(c.corpus, synthesize_tweets(800, 3));
  std::ostringstream log;
  cmd_filter(c, log);
  const std::string first = read_text(artifacts(c).filtered());
  RunConfig c2 = c;
  c2.corpus = d / "first.jsonl";
  std::filesystem::copy_file(artifacts(c).filtered(), c2.corpus);
  c2.workdir = d / "run2";
  cmd_filter(c2, log);
  EXPECT_EQ(read_text(artifacts(c2).filtered()), first);
}

TEST(Commands, MissingPrerequisiteNamesFile) {
  TempDir d("cli-missing");
  RunConfig c = tiny_run(d.path());
  write_records(c.corpus, synthesize_tweets(800, 3));
  std::ostringstream log;
  cmd_filter(c, log);
  cmd_train_lm(c, log);
  try {
    cmd_train_detector(c, log);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(artifacts(c).fake_train().string()), std::string::npos) << e.what();
  }
}

TEST(Commands, InvalidConfigHasNoSideEffects) {
  TempDir d("cli-invalid");
  RunConfig c = tiny_run(d.path());
  c.rl.mini_batch = 100;
  std::ostringstream log;
  EXPECT_THROW(cmd_filter(c, log), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(c.workdir));
}

TEST(Commands, FullPipelineDeterministic) {
  TempDir d("cli-pipeline");
  RunConfig c = tiny_run(d.path());
  write_records(c.corpus, synthesize_tweets(800, 3));
  std::ostringstream log;
  const auto run_all = [&](const RunConfig& cfg) {
    cmd_filter(cfg, log);
    cmd_train_lm(cfg, log);
    cmd_generate(cfg, log);
    cmd_train_detector(cfg, log);
    cmd_evaluate(cfg, log);
    cmd_rl_tune(cfg, log);
    cmd_report(cfg, log);
  };
  run_all(c);
  RunConfig c2 = c;
  c2.workdir = d / "run2";
  run_all(c2);
  const Artifacts a = artifacts(c), b = artifacts(c2);
  // generate writes exactly the configured count
  EXPECT_EQ(load_records(a.fake_train()).size(), 100u);
  EXPECT_EQ(load_records(a.fake_train()).label, Label::machine);
  for (const auto& [x, y] : {std::pair{a.report_temperature(), b.report_temperature()},
                             {a.report_sizes(), b.report_sizes()},
                             {a.report_qq(), b.report_qq()},
                             {a.report_models(), b.report_models()},
                             {a.report_prepost(), b.report_prepost()},
                             {a.detection(), b.detection()},
                             {a.rl_log(), b.rl_log()},
                             {a.lm(), b.lm()},
                             {a.policy(), b.policy()},
                             {a.fake_train(), b.fake_train()}}) {
    EXPECT_EQ(read_text(x), read_text(y)) << x;
  }
  const std::string temp = read_text(a.report_temperature());
  EXPECT_EQ(temp.rfind("# config_hash=" + config_hash(c) + "\n", 0), 0u);
  // one header row and one data row for the single grid cell
  EXPECT_EQ(std::count(temp.begin(), temp.end(), '\n'), 3);
  const std::string pp = read_text(a.report_prepost());
  EXPECT_EQ(std::count(pp.begin(), pp.end(), '\n'), 4);
  std::istringstream qq(read_text(a.report_qq()));
  std::string line;
  std::getline(qq, line);
  std::getline(qq, line);
  double last_a = -1, last_b = -1, qa, qb;
  while (qq >> qa >> qb) {
    EXPECT_GE(qa, last_a);
    EXPECT_GE(qb, last_b);
    last_a = qa;
    last_b = qb;
  }
}

TEST(Binary, ExitCodes) {
  TempDir d("cli-exit");
  EXPECT_EQ(run_evl("--help"), 0);
  EXPECT_EQ(run_evl(""), 1);
  EXPECT_EQ(run_evl("frobnicate"), 1);
  EXPECT_EQ(run_evl("--set lm.nope=1 config"), 1);
  EXPECT_EQ(run_evl("--config " + (d / "missing.ini").string() + " config"), 1);
  EXPECT_EQ(run_evl("--set sampling.strategy=greedy --set sampling.k=3 config"), 1);
  EXPECT_EQ(run_evl("--workdir " + d.path().string() + " --set corpus=" + (d / "none.jsonl").string() + " filter"), 2);

  write_text(d / "bad.jsonl", "{\"text\": \"hi\"\n");
  const std::string err =
      run_evl_stderr("--workdir " + (d / "w").string() + " --set corpus=" + (d / "bad.jsonl").string() + " filter", d.path());
  EXPECT_NE(err.find("line 1"), std::string::npos) << err;
  EXPECT_EQ(run_evl("--workdir " + (d / "w").string() + " --set corpus=" + (d / "bad.jsonl").string() + " filter"), 2);

  EXPECT_EQ(run_evl("synth -o " + (d / "s.jsonl").string() + " -n 50"), 0);
  EXPECT_EQ(load_records(d / "s.jsonl").size(), 50u);
  EXPECT_EQ(run_evl("--quiet --workdir " + (d / "w").string() + " --set corpus=" + (d / "s.jsonl").string() + " filter"), 0);
  const std::string err2 = run_evl_stderr("--workdir " + (d / "w2").string() + " train-detector", d.path());
  EXPECT_NE(err2.find("fake-train-s1.jsonl"), std::string::npos) << err2;
}
