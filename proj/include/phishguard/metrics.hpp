#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "phishguard/corpus.hpp"
#include "phishguard/model.hpp"
#include "phishguard/perturb.hpp"

namespace phishguard::metrics {

/// Class 1 (phishing) is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels);

/// A metric whose denominator may vanish; then value is 0 and degenerate is set.
struct Ratio {
  double value = 0.0;
  bool degenerate = false;
};

double accuracy(const ConfusionMatrix& cm);
Ratio precision(const ConfusionMatrix& cm);
Ratio recall(const ConfusionMatrix& cm);
/// Harmonic mean of precision and recall. Debug builds assert it equals
/// 2tp / (2tp + fp + fn).
Ratio f1(const ConfusionMatrix& cm);
/// 2tp / (2tp + fp + fn), the count form of F1.
Ratio f1_from_counts(const ConfusionMatrix& cm);

/// Mann-Whitney U / (n_pos * n_neg) via midranks: the probability that a
/// random positive outscores a random negative, ties counting 1/2.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Area under the empirical ROC curve by the trapezoid rule.
double auc_trapezoid(std::span<const double> scores, std::span<const int> labels);

struct ClassificationMetrics {
  ConfusionMatrix cm;
  double accuracy = 0.0;
  Ratio precision;
  Ratio recall;
  Ratio f1;
  std::optional<double> auc;  // empty when only one class is present
};

/// Predicts class 1 when probs[1] > threshold (0.5 is argmax).
ClassificationMetrics evaluate(std::span<const model::Probs> probs, std::span<const int> labels,
                               double threshold = 0.5);

using ScoreFn = std::function<model::Probs(std::string_view)>;

struct ModelUnderTest {
  std::string name;
  ScoreFn score;
};

struct NoiseAccuracy {
  double level = 0.0;
  double accuracy = 0.0;
};

struct ModelReport {
  std::string name;
  ClassificationMetrics clean;
  std::vector<NoiseAccuracy> noise;  // in the order the levels were supplied
  bool non_increasing = true;        // accuracy never rises as noise grows
};

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  std::vector<double> levels;
  std::vector<ModelReport> models;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Clean metrics plus accuracy at each noise level for every model. Every
/// noisy set must hold the same record ids, in the same order, as `clean`.
EvalReport robustness_report(const std::vector<ModelUnderTest>& models, const corpus::Dataset& clean,
                             std::span<const perturb::NoisySet> noisy, double threshold = 0.5);

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// Two column-aligned tables: clean metrics and accuracy under noise.
/// Values use four decimals.
std::string render_text(const EvalReport& r);

}  // namespace phishguard::metrics
