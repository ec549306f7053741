#include "evl/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "evl/error.hpp"
#include "evl/text.hpp"

namespace evl::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view s, std::string_view key) {
  T v{};
  const auto t = text::trim(s);
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key " + std::string(key) + ": cannot parse '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, std::string_view key) {
  const auto t = text::to_lower_ascii(text::trim(s));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config key " + std::string(key) + ": expected a boolean, got '" + std::string(s) + "'");
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(',', pos);
    if (end == std::string_view::npos) end = s.size();
    auto item = text::trim(s.substr(pos, end - pos));
    if (!item.empty()) out.push_back(std::move(item));
    pos = end + 1;
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += f(v[i]);
  }
  return out;
}

bool is_none(std::string_view s) {
  const auto t = text::to_lower_ascii(text::trim(s));
  return t.empty() || t == "none";
}

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

// Ordered by section then declaration order.
using Registry = std::vector<std::pair<std::string, Field>>;

#define EVL_INT(NAME, EXPR, TYPE)                                                                    \
  reg.push_back({NAME, Field{[](RunConfig& c, std::string_view v) { EXPR = parse_number<TYPE>(v, NAME); }, \
                             [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(EXPR); }}})
#define EVL_DBL(NAME, EXPR)                                                                           \
  reg.push_back({NAME, Field{[](RunConfig& c, std::string_view v) { EXPR = parse_number<double>(v, NAME); }, \
                             [](const RunConfig& c) -> std::optional<std::string> { return fmt(EXPR); }}})
#define EVL_BOOL(NAME, EXPR)                                                                          \
  reg.push_back({NAME, Field{[](RunConfig& c, std::string_view v) { EXPR = parse_bool(v, NAME); },       \
                             [](const RunConfig& c) -> std::optional<std::string> {                   \
                               return std::string(EXPR ? "true" : "false");                          \
                             }}})
#define EVL_PATH(NAME, EXPR)                                                                          \
  reg.push_back({NAME, Field{[](RunConfig& c, std::string_view v) { EXPR = text::trim(v); },             \
                             [](const RunConfig& c) -> std::optional<std::string> { return EXPR.string(); }}})

const Registry& registry() {
  static const Registry reg_ = [] {
    Registry reg;
    EVL_INT("seed", c.seed, std::uint64_t);
    EVL_PATH("corpus", c.corpus);
    EVL_PATH("workdir", c.workdir);

    EVL_BOOL("filter.require_english", c.filter.require_english);
    EVL_BOOL("filter.require_verified", c.filter.require_verified);
    reg.push_back({"filter.max_followers",
                   Field{[](RunConfig& c, std::string_view v) {
                           if (is_none(v)) c.filter.max_followers.reset();
                           else c.filter.max_followers = parse_number<std::int64_t>(v, "filter.max_followers");
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return c.filter.max_followers ? std::to_string(*c.filter.max_followers) : "none";
                         }}});
    EVL_BOOL("filter.require_non_truncated", c.filter.require_non_truncated);
    EVL_BOOL("filter.require_original", c.filter.require_original);
    reg.push_back({"filter.max_daily_rate",
                   Field{[](RunConfig& c, std::string_view v) {
                           if (is_none(v)) c.filter.max_daily_rate.reset();
                           else c.filter.max_daily_rate = parse_number<double>(v, "filter.max_daily_rate");
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return c.filter.max_daily_rate ? fmt(*c.filter.max_daily_rate) : "none";
                         }}});
    EVL_BOOL("filter.drop_blank", c.filter.drop_blank);
    EVL_DBL("filter.split_ratio", c.split_ratio);
    EVL_INT("filter.max_records", c.max_records, std::size_t);

    EVL_INT("vocab.max_size", c.vocab_size, std::size_t);

    EVL_INT("lm.embedding_dim", c.lm.embedding_dim, int);
    EVL_INT("lm.layers", c.lm.layers, int);
    EVL_INT("lm.heads", c.lm.heads, int);
    EVL_INT("lm.context_len", c.lm.context_len, int);
    EVL_DBL("lm.learning_rate", c.lm.learning_rate);
    EVL_DBL("lm.momentum", c.lm.momentum);
    EVL_INT("lm.epochs", c.lm.epochs, int);
    EVL_INT("lm.batch_size", c.lm.batch_size, int);
    EVL_DBL("lm.grad_clip", c.lm.grad_clip);
    EVL_DBL("lm.holdout_fraction", c.lm.holdout_fraction);

    reg.push_back({"sampling.strategy",
                   Field{[](RunConfig& c, std::string_view v) { c.sampling.strategy = parse_strategy(text::trim(v)); },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return std::string(to_string(c.sampling.strategy));
                         }}});
    EVL_DBL("sampling.temperature", c.sampling.temperature);
    reg.push_back({"sampling.k", Field{[](RunConfig& c, std::string_view v) {
                                         if (is_none(v)) c.sampling.k.reset();
                                         else c.sampling.k = parse_number<int>(v, "sampling.k");
                                       },
                                       [](const RunConfig& c) -> std::optional<std::string> {
                                         if (!c.sampling.k) return std::nullopt;
                                         return std::to_string(*c.sampling.k);
                                       }}});
    reg.push_back({"sampling.p", Field{[](RunConfig& c, std::string_view v) {
                                         if (is_none(v)) c.sampling.p.reset();
                                         else c.sampling.p = parse_number<double>(v, "sampling.p");
                                       },
                                       [](const RunConfig& c) -> std::optional<std::string> {
                                         if (!c.sampling.p) return std::nullopt;
                                         return fmt(*c.sampling.p);
                                       }}});
    EVL_INT("sampling.max_new_tokens", c.sampling.max_new_tokens, int);
    EVL_INT("sampling.min_new_tokens", c.sampling.min_new_tokens, int);

    EVL_DBL("prompts.prefix_probability", c.prompts.prefix_probability);
    EVL_INT("prompts.max_prefix_tokens", c.prompts.max_prefix_tokens, int);

    EVL_INT("generate.train_count", c.generate_train, std::size_t);
    EVL_INT("generate.eval_count", c.generate_eval, std::size_t);

    EVL_INT("detector.layers", c.detector.layers, int);
    EVL_INT("detector.heads", c.detector.heads, int);
    EVL_INT("detector.dim", c.detector.dim, int);
    EVL_INT("detector.max_len", c.detector.max_len, int);
    EVL_DBL("detector.learning_rate", c.detector.learning_rate);
    EVL_INT("detector.epochs", c.detector.epochs, int);
    EVL_INT("detector.batch_size", c.detector.batch_size, int);
    EVL_DBL("detector.nb_alpha", c.nb_alpha);

    EVL_DBL("reward.special_char_limit", c.reward.special_char_limit);
    EVL_INT("reward.repetition_free_limit", c.reward.repetition_free_limit, int);
    EVL_INT("reward.repetition_floor", c.reward.repetition_floor, int);
    EVL_DBL("reward.acceptability_threshold", c.reward.acceptability_threshold);
    EVL_DBL("reward.dictionary_min", c.reward.dictionary_min);
    EVL_DBL("reward.word_fraction_floor", c.reward.word_fraction_floor);
    EVL_INT("reward.emoji_limit", c.reward.emoji_limit, int);
    EVL_DBL("reward.emoji_step", c.reward.emoji_step);
    EVL_DBL("reward.query_overlap_limit", c.reward.query_overlap_limit);
    EVL_INT("reward.special_token_limit", c.reward.special_token_limit, int);
    EVL_DBL("reward.special_token_step", c.reward.special_token_step);
    EVL_DBL("reward.same_start_limit", c.reward.same_start_limit);
    EVL_DBL("reward.same_start_floor", c.reward.same_start_floor);
    EVL_DBL("reward.number_start_limit", c.reward.number_start_limit);
    EVL_DBL("reward.number_start_floor", c.reward.number_start_floor);
    EVL_DBL("reward.unknown_first", c.reward.unknown_first);
    EVL_DBL("reward.multiplier", c.reward.multiplier);
    EVL_PATH("reward.dictionary", c.dictionary);
    EVL_DBL("reward.acceptability_anchor", c.acceptability_anchor);
    EVL_INT("reward.calibration_texts", c.calibration_texts, std::size_t);

    EVL_DBL("rl.learning_rate", c.rl.learning_rate);
    EVL_INT("rl.mini_batch", c.rl.mini_batch, int);
    EVL_INT("rl.rollout_batch", c.rl.rollout_batch, int);
    EVL_DBL("rl.kl_coefficient", c.rl.kl_coefficient);
    EVL_DBL("rl.clip_ratio", c.rl.clip_ratio);
    EVL_INT("rl.ppo_epochs", c.rl.ppo_epochs, int);
    EVL_DBL("rl.prefix_probability", c.rl.prefix_probability);
    EVL_INT("rl.max_prefix_tokens", c.rl.max_prefix_tokens, int);
    EVL_DBL("rl.grad_clip", c.rl.grad_clip);
    EVL_INT("rl.steps", c.rl.steps, int);
    EVL_INT("rl.eval_samples", c.rl_eval_samples, std::size_t);

    reg.push_back({"report.temperatures",
                   Field{[](RunConfig& c, std::string_view v) {
                           c.report_temperatures.clear();
                           for (const auto& x : split_list(v)) c.report_temperatures.push_back(parse_number<double>(x, "report.temperatures"));
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return join(c.report_temperatures, [](double x) { return fmt(x); });
                         }}});
    reg.push_back({"report.strategies",
                   Field{[](RunConfig& c, std::string_view v) {
                           c.report_strategies.clear();
                           for (const auto& x : split_list(v)) c.report_strategies.push_back(parse_strategy(x));
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return join(c.report_strategies, [](Strategy s) { return std::string(to_string(s)); });
                         }}});
    reg.push_back({"report.train_sizes",
                   Field{[](RunConfig& c, std::string_view v) {
                           c.report_train_sizes.clear();
                           for (const auto& x : split_list(v)) c.report_train_sizes.push_back(parse_number<std::size_t>(x, "report.train_sizes"));
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return join(c.report_train_sizes, [](std::size_t x) { return std::to_string(x); });
                         }}});
    EVL_INT("report.eval_size", c.report_eval_size, std::size_t);
    EVL_INT("report.qq_quantiles", c.qq_quantiles, std::size_t);
    reg.push_back({"report.model_sizes",
                   Field{[](RunConfig& c, std::string_view v) {
                           c.report_model_sizes.clear();
                           for (const auto& x : split_list(v)) {
                             const auto at = x.find('x');
                             if (at == std::string::npos) throw ConfigError("report.model_sizes entries look like 32x1 (dim x layers)");
                             c.report_model_sizes.push_back({parse_number<int>(x.substr(0, at), "report.model_sizes"),
                                                             parse_number<int>(x.substr(at + 1), "report.model_sizes")});
                           }
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return join(c.report_model_sizes, [](const ModelSize& m) {
                             return std::to_string(m.embedding_dim) + "x" + std::to_string(m.layers);
                           });
                         }}});
    EVL_INT("report.top_k", c.report_top_k, int);
    EVL_DBL("report.top_p", c.report_top_p);
    EVL_DBL("report.typical_p", c.report_typical_p);
    return reg;
  }();
  return reg_;
}

#undef EVL_INT
#undef EVL_DBL
#undef EVL_BOOL
#undef EVL_PATH

const Field& find_field(std::string_view key) {
  for (const auto& [name, f] : registry()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

SamplingConfig RunConfig::default_sampling() {
  SamplingConfig s = SamplingConfig::random(1.0);
  s.max_new_tokens = 32;
  s.min_new_tokens = 3;
  return s;
}

EncoderConfig RunConfig::default_detector() { return EncoderConfig{}; }

void RunConfig::finalize() {
  if (sampling.strategy == Strategy::top_k && !sampling.k) sampling.k = 100;
  if ((sampling.strategy == Strategy::nucleus || sampling.strategy == Strategy::typical) && !sampling.p) {
    sampling.p = 0.95;
  }
  lm.seed = seed;
  detector.seed = seed;
  rl.seed = seed;
  sampling.seed = seed;
}

void RunConfig::validate() const {
  filter.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("filter.split_ratio must lie in (0, 1)");
  if (vocab_size < 5) throw ConfigError("vocab.max_size must be at least 5");
  lm.validate();
  sampling.validate();
  if (sampling.max_new_tokens >= lm.context_len) {
    throw ConfigError("sampling.max_new_tokens must be below lm.context_len");
  }
  if (!(prompts.prefix_probability >= 0.0 && prompts.prefix_probability <= 1.0)) {
    throw ConfigError("prompts.prefix_probability must lie in [0, 1]");
  }
  if (prompts.max_prefix_tokens < 1) throw ConfigError("prompts.max_prefix_tokens must be at least 1");
  if (prompts.max_prefix_tokens + 1 >= lm.context_len) {
    throw ConfigError("prompts.max_prefix_tokens must leave room in lm.context_len");
  }
  if (generate_train == 0 || generate_eval == 0) throw ConfigError("generate counts must be positive");
  detector.validate();
  if (!(nb_alpha > 0.0)) throw ConfigError("detector.nb_alpha must be positive");
  reward.validate();
  if (!(acceptability_anchor > 0.0 && acceptability_anchor < 1.0)) {
    throw ConfigError("reward.acceptability_anchor must lie in (0, 1)");
  }
  if (calibration_texts == 0) throw ConfigError("reward.calibration_texts must be positive");
  rl.validate();
  if (rl.max_prefix_tokens + 1 >= lm.context_len) throw ConfigError("rl.max_prefix_tokens must leave room in lm.context_len");
  if (rl_eval_samples < 100) throw ConfigError("rl.eval_samples must be at least 100");
  if (report_temperatures.empty() || report_strategies.empty() || report_train_sizes.empty()) {
    throw ConfigError("report needs temperatures, strategies and train_sizes");
  }
  for (double t : report_temperatures) {
    if (!(t > 0.0)) throw ConfigError("report.temperatures must be positive");
  }
  for (auto s : report_train_sizes) {
    if (s == 0) throw ConfigError("report.train_sizes must be positive");
  }
  if (report_eval_size == 0 || qq_quantiles == 0) throw ConfigError("report.eval_size and qq_quantiles must be positive");
  for (const auto& m : report_model_sizes) {
    if (m.embedding_dim <= 0 || m.layers <= 0 || m.embedding_dim % lm.heads != 0) {
      throw ConfigError("report.model_sizes entries need positive sizes with dim divisible by lm.heads");
    }
  }
  if (report_top_k < 1) throw ConfigError("report.top_k must be at least 1");
  if (!(report_top_p > 0.0 && report_top_p <= 1.0) || !(report_typical_p > 0.0 && report_typical_p <= 1.0)) {
    throw ConfigError("report.top_p and report.typical_p must lie in (0, 1]");
  }
}

RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      find_field(key).set(cfg, node.data());
      continue;
    }
    for (const auto& [sub, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("config: nested sections are not supported");
      find_field(key + "." + sub).set(cfg, leaf.data());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
  const auto key = text::trim(assignment.substr(0, eq));
  find_field(key).set(cfg, assignment.substr(eq + 1));
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  std::string section;
  for (const auto& [name, field] : registry()) {
    const auto dot = name.find('.');
    const std::string sec = dot == std::string::npos ? "" : name.substr(0, dot);
    const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
    if (sec != section) {
      out << "\n[" << sec << "]\n";
      section = sec;
    }
    if (auto v = field.get(cfg)) out << key << " = " << *v << '\n';
  }
}

std::string config_text(const RunConfig& cfg) {
  std::ostringstream ss;
  write_config(ss, cfg);
  return ss.str();
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.workdir.clear();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_text(c))));
  return buf;
}

SamplingConfig sampling_for(const RunConfig& cfg, Strategy s) {
  SamplingConfig out;
  switch (s) {
    case Strategy::greedy: out = SamplingConfig::greedy(); break;
    case Strategy::random: out = SamplingConfig::random(); break;
    case Strategy::top_k: out = SamplingConfig::top_k(cfg.report_top_k); break;
    case Strategy::nucleus: out = SamplingConfig::nucleus(cfg.report_top_p); break;
    case Strategy::typical: out = SamplingConfig::typical(cfg.report_typical_p); break;
  }
  out.temperature = cfg.sampling.temperature;
  out.max_new_tokens = cfg.sampling.max_new_tokens;
  out.min_new_tokens = cfg.sampling.min_new_tokens;
  out.seed = cfg.sampling.seed;
  return out;
}

}  // namespace evl::cli
