#include "evl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "evl/error.hpp"
#include "evl/naive_bayes.hpp"
#include "evl/rng.hpp"

namespace evl {

Corpus generate_corpus(const LmPolicy& m, const Tokenizer& tok, std::span<const TokenSeq> prompt_pool,
                       const PromptConfig& prompts, const SamplingConfig& sampling, std::size_t n,
                       std::uint64_t seed) {
  sampling.validate();
  Corpus c;
  c.label = Label::machine;
  if (n == 0) return c;
  const auto queries = make_queries(prompt_pool, n, prompts.prefix_probability, derive_seed(seed, 0x7101),
                                    prompts.max_prefix_tokens);
  c.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(derive_seed(seed, 0x6e4), i));
    const auto seq = generate(m, queries[i], sampling, rng);
    TextRecord r;
    r.text = tok.decode(seq);
    r.author_id = "generator";
    r.lang = "en";
    r.verified = true;
    r.created_at = static_cast<std::int64_t>(i);
    c.records.push_back(std::move(r));
  }
  return c;
}

void GridConfig::validate() const {
  if (temperatures.empty() || strategies.empty() || train_sizes.empty()) {
    throw ConfigError("grid needs at least one temperature, strategy and train size");
  }
  for (double t : temperatures) {
    if (!(t > 0.0)) throw ConfigError("grid temperatures must be positive");
  }
  for (auto s : train_sizes) {
    if (s == 0) throw ConfigError("grid train sizes must be positive");
  }
  if (eval_size == 0) throw ConfigError("grid eval_size must be positive");
  for (const auto& s : strategies) s.validate();
}

Metrics nb_detection(const Tokenizer& tok, const LabeledSet& train, const LabeledSet& eval) {
  const auto model = nb_train(bow_featurize(tok, train.texts), train.labels, tok.size(), 1.0);
  std::vector<Label> pred;
  pred.reserve(eval.size());
  for (const auto& p : nb_predict(model, bow_featurize(tok, eval.texts))) pred.push_back(p.label);
  return compute_metrics(pred, eval.labels);
}

namespace {

Corpus take(const Corpus& c, std::size_t n) {
  Corpus out;
  out.label = c.label;
  out.split = c.split;
  out.records.assign(c.records.begin(), c.records.begin() + static_cast<std::ptrdiff_t>(std::min(n, c.records.size())));
  return out;
}

}  // namespace

ExperimentReport grid_experiment(const LmPolicy& generator, const Tokenizer& tok, const Corpus& human_train,
                                 const Corpus& human_eval, const GridConfig& grid) {
  grid.validate();
  const std::size_t max_train = *std::max_element(grid.train_sizes.begin(), grid.train_sizes.end());
  if (human_train.size() < max_train) throw Error("human training corpus smaller than the largest grid size");
  if (human_eval.size() < grid.eval_size) throw Error("human evaluation corpus smaller than eval_size");
  const auto prompt_pool = encode_all(tok, human_train.texts());
  const Corpus human_eval_cut = take(human_eval, grid.eval_size);

  ExperimentReport report;
  std::uint64_t cell = 0;
  for (const auto& base : grid.strategies) {
    for (double tau : grid.temperatures) {
      SamplingConfig sc = base;
      sc.temperature = tau;
      const auto cell_seed = derive_seed(grid.seed, cell++);
      // one pool per (strategy, temperature); smaller sizes use its prefix
      const Corpus fake_train =
          generate_corpus(generator, tok, prompt_pool, grid.prompts, sc, max_train, derive_seed(cell_seed, 1));
      const Corpus fake_eval =
          generate_corpus(generator, tok, prompt_pool, grid.prompts, sc, grid.eval_size, derive_seed(cell_seed, 2));
      const LabeledSet eval = balance(human_eval_cut, fake_eval, derive_seed(cell_seed, 3));
      for (std::size_t size : grid.train_sizes) {
        const LabeledSet train = balance(take(human_train, size), take(fake_train, size), derive_seed(cell_seed, 4));
        const Metrics m = nb_detection(tok, train, eval);
        report.rows.push_back({base.strategy, tau, size, m.accuracy, m.f1});
      }
    }
  }
  return report;
}

namespace {

std::vector<double> type_probabilities(std::span<const std::string> texts) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& t : texts) {
    for (auto& piece : Tokenizer::split(t)) {
      ++counts[piece];
      ++total;
    }
  }
  if (total == 0) throw Error("corpus has no tokens");
  std::vector<double> p;
  p.reserve(counts.size());
  for (const auto& [_, c] : counts) p.push_back(static_cast<double>(c) / static_cast<double>(total));
  std::sort(p.begin(), p.end());
  return p;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<std::pair<double, double>> qq_quantiles(std::span<const std::string> a,
                                                    std::span<const std::string> b, std::size_t n_quantiles) {
  if (a.empty() || b.empty()) throw Error("qq_quantiles needs two nonempty corpora");
  if (n_quantiles == 0) throw ConfigError("n_quantiles must be positive");
  const auto pa = type_probabilities(a);
  const auto pb = type_probabilities(b);
  std::vector<std::pair<double, double>> out;
  out.reserve(n_quantiles);
  for (std::size_t i = 0; i < n_quantiles; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n_quantiles);
    out.emplace_back(quantile(pa, q), quantile(pb, q));
  }
  return out;
}

void write_report_tsv(std::ostream& out, const ExperimentReport& r) {
  out << "strategy\ttemperature\ttrain_size\taccuracy\tf1\n";
  for (const auto& row : r.rows) {
    out << to_string(row.strategy) << '\t' << std::fixed << std::setprecision(2) << row.temperature << '\t'
        << row.train_size << '\t' << std::setprecision(6) << row.accuracy << '\t' << row.f1 << std::defaultfloat
        << '\n';
  }
}

void write_qq_tsv(std::ostream& out, std::span<const std::pair<double, double>> pairs) {
  out << "q_a\tq_b\n";
  for (const auto& [x, y] : pairs) {
    out << std::scientific << std::setprecision(9) << x << '\t' << y << std::defaultfloat << '\n';
  }
}

}  // namespace evl
