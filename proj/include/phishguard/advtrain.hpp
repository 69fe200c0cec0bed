#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phishguard/corpus.hpp"
#include "phishguard/model.hpp"
#include "phishguard/tokenize.hpp"

namespace phishguard::advtrain {

struct FgmConfig {
  double epsilon = 0.001;
  double lambda = 0.5;

  void validate() const;
};

struct TrainConfig {
  double lr = 0.1;
  std::size_t epochs = 5;
  std::size_t batch_size = 4;
  std::size_t grad_accum = 8;
  std::uint64_t seed = 42;
  std::optional<FgmConfig> fgm;  // empty: baseline training

  void validate() const;
};

struct LossBreakdown {
  double l_clean = 0.0;
  double l_adv = 0.0;
  double l_total = 0.0;
};

struct Example {
  std::string id;
  std::vector<tokenize::TokenId> ids;
  int label = 0;
};

std::vector<Example> encode_dataset(const corpus::Dataset& d, const tokenize::Vocabulary& v,
                                    std::size_t max_len = tokenize::kDefaultMaxLen);

/// delta = epsilon * g / ||g||_F, or exact zero when ||g||_F < 1e-12.
/// The norm is computed with scaling so tiny or huge entries do not
/// underflow or overflow.
model::Matrix fgm_delta(const model::Matrix& g, double epsilon);

double frobenius_norm(const model::Matrix& m);

/// Dense accumulator for parameter gradients; embedding rows are tracked
/// so clearing and applying cost O(rows touched).
class GradientBuffer {
 public:
  GradientBuffer(std::size_t vocab_size, std::size_t dim);

  void add(const model::Gradients& g, double scale);
  /// params -= lr * (sum / count). No-op when count is zero.
  void apply_sgd(model::ModelParams& params, double lr) const;
  void clear();

  std::size_t count() const { return count_; }
  void add_count(std::size_t n) { count_ += n; }

  const model::Matrix& embeddings() const { return embeddings_; }
  const model::Matrix& head_w() const { return head_w_; }
  const std::array<double, model::kNumClasses>& head_b() const { return head_b_; }
  const std::vector<tokenize::TokenId>& touched_rows() const { return touched_; }

 private:
  model::Matrix embeddings_;
  std::vector<bool> touched_flag_;
  std::vector<tokenize::TokenId> touched_;
  model::Matrix head_w_;
  std::array<double, model::kNumClasses> head_b_{};
  std::size_t count_ = 0;
};

/// One micro-batch. Per example: clean forward/backward (l_clean and the
/// token-embedding gradient), delta from fgm_delta, forward/backward on the
/// perturbed embeddings (l_adv), then the gradient of l_clean + lambda*l_adv
/// is added to `grads`. Without `fgm` only the clean pass runs and l_adv is 0.
/// Parameters are not modified. Returns batch-mean losses.
LossBreakdown adversarial_step(const model::ModelParams& p, std::span<const Example> batch,
                               const std::optional<FgmConfig>& fgm, GradientBuffer& grads);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double l_clean = 0.0;
  double l_adv = 0.0;
  double l_total = 0.0;
  double val_accuracy = 0.0;
  std::size_t updates = 0;
  double seconds = 0.0;  // wall clock, not part of any artifact
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<LossBreakdown> steps;  // one per micro-batch
  std::size_t best_epoch = 0;
};

struct TrainResult {
  model::ModelParams params;  // from the best validation epoch
  model::ModelParams final_params;
  TrainHistory history;
};

double accuracy(const model::ModelParams& p, std::span<const Example> data);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch SGD. Each epoch shuffles the training examples with a
/// generator seeded once from cfg.seed, splits them into micro-batches of
/// batch_size and applies an update with the mean accumulated gradient
/// after every grad_accum micro-batches (and once more for a trailing
/// partial window at epoch end). Returns the parameters from the epoch with
/// the best validation accuracy, later epochs winning ties.
TrainResult train(model::ModelParams p, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

TrainResult train(model::ModelParams p, const corpus::Dataset& train_set,
                  const corpus::Dataset& val_set, const tokenize::Vocabulary& vocab,
                  const TrainConfig& cfg, std::size_t max_len = tokenize::kDefaultMaxLen);

}  // namespace phishguard::advtrain
