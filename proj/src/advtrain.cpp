#include "phishguard/advtrain.hpp"

#include <chrono>
#include <cmath>

#include "phishguard/error.hpp"
#include "phishguard/rng.hpp"

namespace phishguard::advtrain {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("advtrain", msg); }

}  // namespace

void FgmConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("FGM epsilon must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("FGM lambda must be >= 0");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("learning rate must be > 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (grad_accum < 1) fail("grad_accum must be >= 1");
  if (fgm) fgm->validate();
}

std::vector<Example> encode_dataset(const corpus::Dataset& d, const tokenize::Vocabulary& v,
                                    std::size_t max_len) {
  std::vector<Example> out;
  out.reserve(d.size());
  for (const auto& r : d.records()) {
    out.push_back({r.id, tokenize::encode(r.text, v, max_len).ids, r.label});
  }
  return out;
}

double frobenius_norm(const model::Matrix& m) {
  double scale = 0.0;
  for (double x : m.data) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double sum = 0.0;
  for (double x : m.data) {
    const double y = x / scale;
    sum += y * y;
  }
  return scale * std::sqrt(sum);
}

model::Matrix fgm_delta(const model::Matrix& g, double epsilon) {
  model::Matrix delta(g.rows, g.cols);
  const double norm = frobenius_norm(g);
  if (!(norm >= 1e-12)) return delta;
  for (std::size_t i = 0; i < g.data.size(); ++i) delta.data[i] = epsilon * (g.data[i] / norm);
  return delta;
}

GradientBuffer::GradientBuffer(std::size_t vocab_size, std::size_t dim)
    : embeddings_(vocab_size, dim), touched_flag_(vocab_size, false),
      head_w_(dim, model::kNumClasses) {}

void GradientBuffer::add(const model::Gradients& g, double scale) {
  for (const auto& [id, values] : g.embedding_rows) {
    const auto row = static_cast<std::size_t>(id);
    if (!touched_flag_[row]) {
      touched_flag_[row] = true;
      touched_.push_back(id);
    }
    auto dst = embeddings_.row(row);
    for (std::size_t j = 0; j < values.size(); ++j) dst[j] += scale * values[j];
  }
  for (std::size_t i = 0; i < head_w_.data.size(); ++i) head_w_.data[i] += scale * g.head_w.data[i];
  for (std::size_t k = 0; k < model::kNumClasses; ++k) head_b_[k] += scale * g.head_b[k];
}

void GradientBuffer::apply_sgd(model::ModelParams& params, double lr) const {
  if (count_ == 0) return;
  const double step = lr / static_cast<double>(count_);
  for (auto id : touched_) {
    auto dst = params.embeddings.row(static_cast<std::size_t>(id));
    const auto src = embeddings_.row(static_cast<std::size_t>(id));
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= step * src[j];
  }
  for (std::size_t i = 0; i < head_w_.data.size(); ++i) params.head_w.data[i] -= step * head_w_.data[i];
  for (std::size_t k = 0; k < model::kNumClasses; ++k) params.head_b[k] -= step * head_b_[k];
}

void GradientBuffer::clear() {
  for (auto id : touched_) {
    auto row = embeddings_.row(static_cast<std::size_t>(id));
    std::fill(row.begin(), row.end(), 0.0);
    touched_flag_[static_cast<std::size_t>(id)] = false;
  }
  touched_.clear();
  std::fill(head_w_.data.begin(), head_w_.data.end(), 0.0);
  head_b_.fill(0.0);
  count_ = 0;
}

LossBreakdown adversarial_step(const model::ModelParams& p, std::span<const Example> batch,
                               const std::optional<FgmConfig>& fgm, GradientBuffer& grads) {
  if (batch.empty()) fail("adversarial_step needs a non-empty batch");
  LossBreakdown sum;
  for (const auto& ex : batch) {
    model::BackwardResult clean;
    try {
      clean = model::backward(p, ex.ids, ex.label);
    } catch (const PipelineError& e) {
      fail("record '" + ex.id + "': " + e.what());
    }
    grads.add(clean.grads, 1.0);
    double l_adv = 0.0;
    double lambda = 0.0;
    if (fgm) {
      lambda = fgm->lambda;
      const auto delta = fgm_delta(clean.grads.token_embeds, fgm->epsilon);
      auto adv = model::backward(p, ex.ids, ex.label, &delta);
      l_adv = adv.loss;
      // A zero weight contributes nothing; skipping keeps lambda = 0 bitwise
      // identical to the baseline.
      if (lambda != 0.0) grads.add(adv.grads, lambda);
    }
    sum.l_clean += clean.loss;
    sum.l_adv += l_adv;
    sum.l_total += clean.loss + lambda * l_adv;
  }
  grads.add_count(batch.size());
  const double n = static_cast<double>(batch.size());
  return {sum.l_clean / n, sum.l_adv / n, sum.l_total / n};
}

double accuracy(const model::ModelParams& p, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    if (model::predict_label(model::forward(p, ex.ids).probs) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(model::ModelParams p, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) fail("training split is empty");

  std::vector<Example> pool(train_set.begin(), train_set.end());
  Rng rng(cfg.seed);
  GradientBuffer grads(p.vocab_size(), p.dim());
  TrainResult result;
  double best_acc = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(std::span(pool));
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t micro = 0;
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, pool.size() - start);
      const auto losses =
          adversarial_step(p, std::span<const Example>(pool).subspan(start, n), cfg.fgm, grads);
      result.history.steps.push_back(losses);
      rec.l_clean += losses.l_clean * static_cast<double>(n);
      rec.l_adv += losses.l_adv * static_cast<double>(n);
      rec.l_total += losses.l_total * static_cast<double>(n);
      if (++micro == cfg.grad_accum) {
        grads.apply_sgd(p, cfg.lr);
        grads.clear();
        ++rec.updates;
        micro = 0;
      }
    }
    if (grads.count() > 0) {
      grads.apply_sgd(p, cfg.lr);
      grads.clear();
      ++rec.updates;
    }
    const double total = static_cast<double>(pool.size());
    rec.l_clean /= total;
    rec.l_adv /= total;
    rec.l_total /= total;
    rec.val_accuracy = accuracy(p, val_set);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!p.all_finite()) fail("parameters diverged to non-finite values in epoch " + std::to_string(epoch));
    if (rec.val_accuracy >= best_acc) {
      best_acc = rec.val_accuracy;
      result.params = p;
      result.history.best_epoch = epoch;
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.final_params = std::move(p);
  return result;
}

TrainResult train(model::ModelParams p, const corpus::Dataset& train_set,
                  const corpus::Dataset& val_set, const tokenize::Vocabulary& vocab,
                  const TrainConfig& cfg, std::size_t max_len) {
  const auto tr = encode_dataset(train_set, vocab, max_len);
  const auto va = encode_dataset(val_set, vocab, max_len);
  return train(std::move(p), tr, va, cfg);
}

}  // namespace phishguard::advtrain
