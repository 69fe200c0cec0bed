#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "phishguard/tokenize.hpp"

namespace phishguard::model {

inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::size_t kDefaultDim = 32;
inline constexpr double kLossClamp = 1e-12;

using Probs = std::array<double, kNumClasses>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// Embedding table (V x d), linear head (d x 2) and bias (2).
/// Row kPadId of the embedding table stays zero.
struct ModelParams {
  Matrix embeddings;
  Matrix head_w;
  Probs head_b{0.0, 0.0};
  std::uint64_t seed = 0;

  std::size_t vocab_size() const { return embeddings.rows; }
  std::size_t dim() const { return embeddings.cols; }
  bool all_finite() const;

  bool operator==(const ModelParams&) const = default;
};

/// Embeddings and head_w uniform in [-0.05, 0.05], head_b zero, PAD row zero.
ModelParams init_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

struct ForwardTrace {
  Matrix token_embeds;  // L x d, lookup + delta; the tensor FGM perturbs
  std::vector<double> pooled;
  std::array<double, kNumClasses> logits{};
  Probs probs{};
  std::size_t pooled_count = 0;  // non-PAD positions
};

/// Mean-pooled embedding -> linear head -> softmax. `delta`, when given,
/// must be L x d and is added to the looked-up embeddings. Throws on a
/// sequence with no non-PAD position.
ForwardTrace forward(const ModelParams& p, std::span<const tokenize::TokenId> ids,
                     const Matrix* delta = nullptr);

/// Softmax with max subtraction.
Probs softmax(const std::array<double, kNumClasses>& logits);

/// -log(max(probs[label], 1e-12)).
double loss(const Probs& probs, int label);

/// Gradients of the cross-entropy loss for one example.
struct Gradients {
  /// Sparse embedding-table gradient: (row id, d values), ascending row id,
  /// one entry per distinct non-PAD id in the sequence.
  std::vector<std::pair<tokenize::TokenId, std::vector<double>>> embedding_rows;
  Matrix head_w;
  std::array<double, kNumClasses> head_b{};
  /// Gradient w.r.t. ForwardTrace::token_embeds (includes the 1/n pooling
  /// factor; zero rows at PAD positions).
  Matrix token_embeds;
};

struct BackwardResult {
  ForwardTrace trace;
  double loss = 0.0;
  Gradients grads;
};

/// Uses dL/dlogits = probs - onehot(label), the derivative of the
/// unclamped cross-entropy.
BackwardResult backward(const ModelParams& p, std::span<const tokenize::TokenId> ids, int label,
                        const Matrix* delta = nullptr);

/// Total inference over raw text: normalizes, encodes and runs forward.
/// Text with no tokens yields softmax(head_b), the model's prior.
class TextClassifier {
 public:
  TextClassifier(tokenize::Vocabulary vocab, ModelParams params,
                 std::size_t max_len = tokenize::kDefaultMaxLen);

  Probs predict_proba(std::string_view text) const;
  Probs predict_ids(std::span<const tokenize::TokenId> ids) const;

  const tokenize::Vocabulary& vocab() const { return vocab_; }
  const ModelParams& params() const { return params_; }
  std::size_t max_len() const { return max_len_; }

 private:
  tokenize::Vocabulary vocab_;
  ModelParams params_;
  std::size_t max_len_;
};

/// Argmax with ties going to class 0.
int predict_label(const Probs& probs);

/// JSON checkpoint: {"format_version":1,"vocab_size","d","seed",
/// "embeddings":[...row-major...],"head_w":[...],"head_b":[b0,b1]}.
/// Doubles are written in shortest round-trip form, so save/load is exact.
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace phishguard::model
