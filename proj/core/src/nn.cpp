#include "evl/nn.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "evl/error.hpp"
#include "evl/rng.hpp"

namespace evl::nn {

namespace {

constexpr double kLnEps = 1e-5;

void layer_norm(const Matrix& x, ConstMatrixMap g, ConstMatrixMap b, Matrix& xhat,
                Eigen::VectorXd& rstd, Matrix& y) {
  const Index n = x.rows();
  const auto d = static_cast<double>(x.cols());
  xhat.resize(x.rows(), x.cols());
  rstd.resize(n);
  for (Index t = 0; t < n; ++t) {
    const double mu = x.row(t).sum() / d;
    const double var = (x.row(t).array() - mu).square().sum() / d;
    rstd(t) = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(t) = (x.row(t).array() - mu) * rstd(t);
  }
  y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
}

// Returns dL/dx and accumulates dL/dg, dL/db.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Eigen::VectorXd& rstd,
                           ConstMatrixMap g, MatrixMap dg, MatrixMap db) {
  dg.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * g.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Index t = 0; t < dy.rows(); ++t) {
    const double m1 = dxhat.row(t).sum() / d;
    const double m2 = (dxhat.row(t).array() * xhat.row(t).array()).sum() / d;
    dx.row(t) = rstd(t) * (dxhat.row(t).array() - m1 - xhat.row(t).array() * m2);
  }
  return dx;
}

RowVector layer_norm_row(const RowVector& x, ConstMatrixMap g, ConstMatrixMap b) {
  const auto d = static_cast<double>(x.size());
  const double mu = x.sum() / d;
  const double var = (x.array() - mu).square().sum() / d;
  const double rstd = 1.0 / std::sqrt(var + kLnEps);
  return ((x.array() - mu) * rstd * g.row(0).array() + b.row(0).array()).matrix();
}

void softmax_rows_inplace(Matrix& s) {
  for (Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

void fill_normal(MatrixMap m, Rng& rng, double std) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = std * rng.normal();
  }
}

}  // namespace

std::size_t ParameterLayout::add(std::string name, Index rows, Index cols) {
  specs_.push_back({std::move(name), rows, cols, total_});
  total_ += static_cast<std::size_t>(rows * cols);
  return specs_.size() - 1;
}

void Architecture::validate() const {
  if (vocab_size < 4) throw ConfigError("vocabulary must hold at least the 4 specials");
  if (dim <= 0 || layers <= 0 || heads <= 0 || ffn_mult <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (context < 2) throw ConfigError("context length must be at least 2");
  if (dim % heads != 0) throw ConfigError("embedding dim must be divisible by head count");
}

TransformerStack::TransformerStack(const Architecture& arch, ParameterLayout& layout) : arch_(arch) {
  arch_.validate();
  const Index d = arch_.dim;
  const Index f = static_cast<Index>(arch_.ffn_mult) * d;
  tok_emb_ = layout.spec(layout.add("tok_emb", arch_.vocab_size, d));
  pos_emb_ = layout.spec(layout.add("pos_emb", arch_.context, d));
  for (int l = 0; l < arch_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerSpecs s;
    s.ln1_g = layout.spec(layout.add(p + "ln1_g", 1, d));
    s.ln1_b = layout.spec(layout.add(p + "ln1_b", 1, d));
    s.w_qkv = layout.spec(layout.add(p + "w_qkv", d, 3 * d));
    s.b_qkv = layout.spec(layout.add(p + "b_qkv", 1, 3 * d));
    s.w_o = layout.spec(layout.add(p + "w_o", d, d));
    s.b_o = layout.spec(layout.add(p + "b_o", 1, d));
    s.ln2_g = layout.spec(layout.add(p + "ln2_g", 1, d));
    s.ln2_b = layout.spec(layout.add(p + "ln2_b", 1, d));
    s.w_fc = layout.spec(layout.add(p + "w_fc", d, f));
    s.b_fc = layout.spec(layout.add(p + "b_fc", 1, f));
    s.w_proj = layout.spec(layout.add(p + "w_proj", f, d));
    s.b_proj = layout.spec(layout.add(p + "b_proj", 1, d));
    layers_.push_back(std::move(s));
  }
  lnf_g_ = layout.spec(layout.add("lnf_g", 1, d));
  lnf_b_ = layout.spec(layout.add("lnf_b", 1, d));
}

void TransformerStack::init(std::span<double> params, std::uint64_t seed) const {
  Rng rng(seed);
  const double d = arch_.dim;
  const double f = static_cast<double>(arch_.ffn_mult) * d;
  const double depth_scale = 1.0 / std::sqrt(2.0 * arch_.layers);
  fill_normal(view(params, tok_emb_), rng, 0.1);
  fill_normal(view(params, pos_emb_), rng, 0.02);
  for (const auto& s : layers_) {
    view(params, s.ln1_g).setOnes();
    view(params, s.ln1_b).setZero();
    fill_normal(view(params, s.w_qkv), rng, 1.0 / std::sqrt(d));
    view(params, s.b_qkv).setZero();
    fill_normal(view(params, s.w_o), rng, depth_scale / std::sqrt(d));
    view(params, s.b_o).setZero();
    view(params, s.ln2_g).setOnes();
    view(params, s.ln2_b).setZero();
    fill_normal(view(params, s.w_fc), rng, 1.0 / std::sqrt(d));
    view(params, s.b_fc).setZero();
    fill_normal(view(params, s.w_proj), rng, depth_scale / std::sqrt(f));
    view(params, s.b_proj).setZero();
  }
  view(params, lnf_g_).setOnes();
  view(params, lnf_b_).setZero();
}

void TransformerStack::forward(std::span<const double> params, std::span<const TokenId> tokens,
                               Cache& cache) const {
  const auto n = static_cast<Index>(tokens.size());
  if (n < 1 || n > arch_.context) {
    throw Error("sequence length " + std::to_string(n) + " outside [1, " +
                std::to_string(arch_.context) + "]");
  }
  const Index d = arch_.dim;
  const Index heads = arch_.heads;
  const Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.tokens.assign(tokens.begin(), tokens.end());
  cache.layers.resize(layers_.size());

  const auto tok = view(params, tok_emb_);
  const auto pos = view(params, pos_emb_);
  Matrix x(n, d);
  for (Index t = 0; t < n; ++t) {
    const TokenId id = tokens[static_cast<std::size_t>(t)];
    if (id < 0 || id >= arch_.vocab_size) throw Error("token id out of range");
    x.row(t) = tok.row(id) + pos.row(t);
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpecs& s = layers_[l];
    LayerCache& c = cache.layers[l];
    c.input = x;
    layer_norm(c.input, view(params, s.ln1_g), view(params, s.ln1_b), c.xhat1, c.rstd1, c.h1);
    c.qkv.noalias() = c.h1 * view(params, s.w_qkv);
    c.qkv.rowwise() += view(params, s.b_qkv).row(0);

    c.att.resize(n, d);
    c.probs.resize(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
      const auto q = c.qkv.middleCols(h * dh, dh);
      const auto k = c.qkv.middleCols(d + h * dh, dh);
      const auto v = c.qkv.middleCols(2 * d + h * dh, dh);
      Matrix& p = c.probs[static_cast<std::size_t>(h)];
      p.noalias() = q * k.transpose();
      p *= scale;
      if (arch_.causal) {
        for (Index i = 0; i < n; ++i) {
          for (Index j = i + 1; j < n; ++j) p(i, j) = -std::numeric_limits<double>::infinity();
        }
      }
      softmax_rows_inplace(p);
      c.att.middleCols(h * dh, dh).noalias() = p * v;
    }
    c.mid = c.input;
    c.mid.noalias() += c.att * view(params, s.w_o);
    c.mid.rowwise() += view(params, s.b_o).row(0);

    layer_norm(c.mid, view(params, s.ln2_g), view(params, s.ln2_b), c.xhat2, c.rstd2, c.h2);
    c.pre_act.noalias() = c.h2 * view(params, s.w_fc);
    c.pre_act.rowwise() += view(params, s.b_fc).row(0);
    c.act = c.pre_act.unaryExpr([](double u) { return gelu(u); });
    x = c.mid;
    x.noalias() += c.act * view(params, s.w_proj);
    x.rowwise() += view(params, s.b_proj).row(0);
  }

  cache.final_in = std::move(x);
  layer_norm(cache.final_in, view(params, lnf_g_), view(params, lnf_b_), cache.xhat_f, cache.rstd_f,
             cache.hidden);
}

void TransformerStack::backward(std::span<const double> params, const Cache& cache,
                                const Matrix& d_hidden, std::span<double> grads) const {
  const Index n = static_cast<Index>(cache.tokens.size());
  const Index d = arch_.dim;
  const Index heads = arch_.heads;
  const Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = layer_norm_backward(d_hidden, cache.xhat_f, cache.rstd_f, view(params, lnf_g_),
                                  view(grads, lnf_g_), view(grads, lnf_b_));

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerSpecs& s = layers_[li];
    const LayerCache& c = cache.layers[li];

    // MLP branch: x = mid + act * W_proj + b_proj
    view(grads, s.w_proj).noalias() += c.act.transpose() * dx;
    view(grads, s.b_proj).row(0) += dx.colwise().sum();
    Matrix d_pre = dx * view(params, s.w_proj).transpose();
    for (Index i = 0; i < d_pre.rows(); ++i) {
      for (Index j = 0; j < d_pre.cols(); ++j) d_pre(i, j) *= gelu_grad(c.pre_act(i, j));
    }
    view(grads, s.w_fc).noalias() += c.h2.transpose() * d_pre;
    view(grads, s.b_fc).row(0) += d_pre.colwise().sum();
    const Matrix d_h2 = d_pre * view(params, s.w_fc).transpose();
    Matrix d_mid = dx + layer_norm_backward(d_h2, c.xhat2, c.rstd2, view(params, s.ln2_g),
                                            view(grads, s.ln2_g), view(grads, s.ln2_b));

    // Attention branch: mid = input + att * W_o + b_o
    view(grads, s.w_o).noalias() += c.att.transpose() * d_mid;
    view(grads, s.b_o).row(0) += d_mid.colwise().sum();
    const Matrix d_att = d_mid * view(params, s.w_o).transpose();

    Matrix d_qkv = Matrix::Zero(n, 3 * d);
    for (Index h = 0; h < heads; ++h) {
      const auto q = c.qkv.middleCols(h * dh, dh);
      const auto k = c.qkv.middleCols(d + h * dh, dh);
      const auto v = c.qkv.middleCols(2 * d + h * dh, dh);
      const Matrix& p = c.probs[static_cast<std::size_t>(h)];
      const auto da = d_att.middleCols(h * dh, dh);
      const Matrix dp = da * v.transpose();
      d_qkv.middleCols(2 * d + h * dh, dh).noalias() = p.transpose() * da;
      const Eigen::VectorXd r = (dp.array() * p.array()).rowwise().sum();
      Matrix ds = p.array() * (dp.array().colwise() - r.array());
      ds *= scale;
      d_qkv.middleCols(h * dh, dh).noalias() = ds * k;
      d_qkv.middleCols(d + h * dh, dh).noalias() = ds.transpose() * q;
    }
    view(grads, s.w_qkv).noalias() += c.h1.transpose() * d_qkv;
    view(grads, s.b_qkv).row(0) += d_qkv.colwise().sum();
    const Matrix d_h1 = d_qkv * view(params, s.w_qkv).transpose();
    dx = d_mid + layer_norm_backward(d_h1, c.xhat1, c.rstd1, view(params, s.ln1_g),
                                     view(grads, s.ln1_g), view(grads, s.ln1_b));
  }

  auto d_tok = view(grads, tok_emb_);
  auto d_pos = view(grads, pos_emb_);
  for (Index t = 0; t < n; ++t) {
    d_tok.row(cache.tokens[static_cast<std::size_t>(t)]) += dx.row(t);
    d_pos.row(t) += dx.row(t);
  }
}

TransformerStack::KvState TransformerStack::begin() const {
  KvState st;
  st.keys.assign(layers_.size(), Matrix::Zero(arch_.context, arch_.dim));
  st.values.assign(layers_.size(), Matrix::Zero(arch_.context, arch_.dim));
  return st;
}

RowVector TransformerStack::step(std::span<const double> params, TokenId token, KvState& st) const {
  if (!arch_.causal) throw Error("incremental decoding requires a causal stack");
  if (st.length >= arch_.context) throw Error("context window exhausted");
  if (token < 0 || token >= arch_.vocab_size) throw Error("token id out of range");
  const Index d = arch_.dim;
  const Index heads = arch_.heads;
  const Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Index t = st.length;

  RowVector x = view(params, tok_emb_).row(token) + view(params, pos_emb_).row(t);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpecs& s = layers_[l];
    const RowVector h1 = layer_norm_row(x, view(params, s.ln1_g), view(params, s.ln1_b));
    RowVector qkv = h1 * view(params, s.w_qkv);
    qkv += view(params, s.b_qkv).row(0);
    st.keys[l].row(t) = qkv.segment(d, d);
    st.values[l].row(t) = qkv.segment(2 * d, d);

    RowVector att(d);
    for (Index h = 0; h < heads; ++h) {
      const auto keys = st.keys[l].block(0, h * dh, t + 1, dh);
      const auto vals = st.values[l].block(0, h * dh, t + 1, dh);
      Eigen::VectorXd sc = keys * qkv.segment(h * dh, dh).transpose();
      sc *= scale;
      const double m = sc.maxCoeff();
      sc = (sc.array() - m).exp();
      sc /= sc.sum();
      att.segment(h * dh, dh) = sc.transpose() * vals;
    }
    x += att * view(params, s.w_o);
    x += view(params, s.b_o).row(0);
    const RowVector h2 = layer_norm_row(x, view(params, s.ln2_g), view(params, s.ln2_b));
    RowVector pre = h2 * view(params, s.w_fc);
    pre += view(params, s.b_fc).row(0);
    const RowVector act = pre.unaryExpr([](double u) { return gelu(u); });
    x += act * view(params, s.w_proj);
    x += view(params, s.b_proj).row(0);
  }
  ++st.length;
  return layer_norm_row(x, view(params, lnf_g_), view(params, lnf_b_));
}

double gelu(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
  constexpr double k = 0.7978845608028654;
  const double th = std::tanh(k * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * k * (1.0 + 3.0 * 0.044715 * x * x);
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

double global_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double clip_global_norm(std::span<double> v, double max_norm) {
  const double norm = global_norm(v);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (double& x : v) x *= f;
  }
  return norm;
}

void SgdMomentum::step(std::span<double> params, std::span<const double> grads) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = mu_ * velocity_[i] + grads[i];
    params[i] -= lr_ * velocity_[i];
  }
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * grads[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace evl::nn
