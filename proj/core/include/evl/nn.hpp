#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evl/tokenizer.hpp"

// Minimal transformer building blocks with hand-written backward passes.
// All parameters of a model live in one flat buffer of doubles; tensors are
// row-major views into it, described by a ParameterLayout. Activations are
// T x D matrices with one row per token.
namespace evl::nn {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
// Parameter and gradient storage. Eigen's vectorized kernels pick their loop
// split from the data address, so unaligned buffers change rounding from run to run.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

struct TensorSpec {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

class ParameterLayout {
 public:
  std::size_t add(std::string name, Index rows, Index cols);
  const TensorSpec& spec(std::size_t id) const { return specs_[id]; }
  const std::vector<TensorSpec>& specs() const { return specs_; }
  std::size_t total() const { return total_; }

 private:
  std::vector<TensorSpec> specs_;
  std::size_t total_ = 0;
};

inline MatrixMap view(std::span<double> buf, const TensorSpec& s) {
  return MatrixMap(buf.data() + s.offset, s.rows, s.cols);
}
inline ConstMatrixMap view(std::span<const double> buf, const TensorSpec& s) {
  return ConstMatrixMap(buf.data() + s.offset, s.rows, s.cols);
}

struct Architecture {
  int vocab_size = 0;
  int dim = 64;
  int layers = 2;
  int heads = 2;
  int context = 48;
  int ffn_mult = 4;
  bool causal = true;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

// Token + position embeddings, pre-norm transformer blocks, final LayerNorm.
// Produces the normalized hidden state for every position.
class TransformerStack {
 public:
  struct LayerCache {
    Matrix input, xhat1, h1, qkv, att, mid, xhat2, h2, pre_act, act;
    Eigen::VectorXd rstd1, rstd2;
    std::vector<Matrix> probs;  // one T x T matrix per head
  };

  struct Cache {
    std::vector<TokenId> tokens;
    std::vector<LayerCache> layers;
    Matrix final_in, xhat_f, hidden;
    Eigen::VectorXd rstd_f;
  };

  // Keys and values of every processed position, for incremental decoding.
  struct KvState {
    std::vector<Matrix> keys;
    std::vector<Matrix> values;
    int length = 0;
  };

  TransformerStack(const Architecture& arch, ParameterLayout& layout);

  const Architecture& arch() const { return arch_; }

  void init(std::span<double> params, std::uint64_t seed) const;

  // tokens.size() must be in [1, context].
  void forward(std::span<const double> params, std::span<const TokenId> tokens, Cache& cache) const;
  // Accumulates parameter gradients given dL/d(hidden).
  void backward(std::span<const double> params, const Cache& cache, const Matrix& d_hidden,
                std::span<double> grads) const;

  KvState begin() const;
  // Processes one more token (causal stacks only); returns its hidden row.
  RowVector step(std::span<const double> params, TokenId token, KvState& state) const;

 private:
  struct LayerSpecs {
    TensorSpec ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
  };

  Architecture arch_;
  TensorSpec tok_emb_, pos_emb_, lnf_g_, lnf_b_;
  std::vector<LayerSpecs> layers_;
};

double gelu(double x);
double gelu_grad(double x);

// Row-wise log-softmax.
Matrix log_softmax_rows(const Matrix& logits);

double global_norm(std::span<const double> v);
// Scales v in place so its L2 norm is at most max_norm; returns the original norm.
double clip_global_norm(std::span<double> v, double max_norm);

class SgdMomentum {
 public:
  SgdMomentum(std::size_t n, double lr, double momentum) : velocity_(n, 0.0), lr_(lr), mu_(momentum) {}
  void step(std::span<double> params, std::span<const double> grads);

 private:
  Buffer velocity_;
  double lr_;
  double mu_;
};

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(std::span<double> params, std::span<const double> grads);
  std::uint64_t steps() const { return t_; }

 private:
  Buffer m_, v_;
  double lr_, b1_, b2_, eps_;
  std::uint64_t t_ = 0;
};

}  // namespace evl::nn
