#include "phishguard/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "phishguard/error.hpp"

namespace phishguard::metrics {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("metrics", msg); }

std::pair<std::size_t, std::size_t> class_sizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail("scores and labels differ in length");
  std::size_t pos = 0, neg = 0;
  for (int l : labels) {
    if (l == 1) {
      ++pos;
    } else if (l == 0) {
      ++neg;
    } else {
      fail("labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) fail("AUC needs both classes present");
  return {pos, neg};
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string level_label(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g%%", level * 100.0);
  return buf;
}

json ratio_json(const Ratio& r) { return {{"value", r.value}, {"degenerate", r.degenerate}}; }
Ratio ratio_from(const json& j) { return {j.at("value").get<double>(), j.at("degenerate").get<bool>()}; }

}  // namespace

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) fail("predictions and labels differ in length");
  if (preds.empty()) fail("confusion matrix needs at least one sample");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], l = labels[i];
    if ((p != 0 && p != 1) || (l != 0 && l != 1)) fail("classes must be 0 or 1");
    if (p == 1 && l == 1) ++cm.tp;
    else if (p == 0 && l == 0) ++cm.tn;
    else if (p == 1) ++cm.fp;
    else ++cm.fn;
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail("empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

Ratio precision(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail("empty confusion matrix");
  const std::size_t den = cm.tp + cm.fp;
  if (den == 0) return {0.0, true};
  return {static_cast<double>(cm.tp) / static_cast<double>(den), false};
}

Ratio recall(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail("empty confusion matrix");
  const std::size_t den = cm.tp + cm.fn;
  if (den == 0) return {0.0, true};
  return {static_cast<double>(cm.tp) / static_cast<double>(den), false};
}

Ratio f1_from_counts(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail("empty confusion matrix");
  const std::size_t den = 2 * cm.tp + cm.fp + cm.fn;
  if (den == 0) return {0.0, true};
  return {2.0 * static_cast<double>(cm.tp) / static_cast<double>(den), false};
}

Ratio f1(const ConfusionMatrix& cm) {
  const Ratio p = precision(cm);
  const Ratio r = recall(cm);
  Ratio out;
  if (p.value + r.value == 0.0) {
    out = {0.0, true};
  } else {
    out = {2.0 * (p.value * r.value) / (p.value + r.value), p.degenerate || r.degenerate};
  }
  assert(std::abs(out.value - f1_from_counts(cm).value) < 1e-12);
  return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  const auto [pos, neg] = class_sizes(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks, 1-based; doubled so tied groups stay integral.
  std::size_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::size_t mid_x2 = (i + 1) + j;  // (first rank + last rank)
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_x2 += mid_x2;
    }
    i = j;
  }
  const double u = static_cast<double>(rank_sum_x2) / 2.0 - static_cast<double>(pos * (pos + 1)) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double auc_trapezoid(std::span<const double> scores, std::span<const int> labels) {
  const auto [pos, neg] = class_sizes(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Sweep thresholds from high to low; integrate in counts, normalise once.
  double area_x2 = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t dtp = 0, dfp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? dtp : dfp) += 1;
      ++j;
    }
    area_x2 += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return area_x2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

ClassificationMetrics evaluate(std::span<const model::Probs> probs, std::span<const int> labels,
                               double threshold) {
  if (probs.size() != labels.size()) fail("predictions and labels differ in length");
  std::vector<int> preds;
  std::vector<double> scores;
  preds.reserve(probs.size());
  scores.reserve(probs.size());
  for (const auto& p : probs) {
    preds.push_back(p[1] > threshold ? 1 : 0);
    scores.push_back(p[1]);
  }
  ClassificationMetrics m;
  m.cm = confusion(preds, labels);
  m.accuracy = accuracy(m.cm);
  m.precision = precision(m.cm);
  m.recall = recall(m.cm);
  m.f1 = f1(m.cm);
  const bool both = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                    std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (both) m.auc = auc(scores, labels);
  return m;
}

EvalReport robustness_report(const std::vector<ModelUnderTest>& models, const corpus::Dataset& clean,
                             std::span<const perturb::NoisySet> noisy, double threshold) {
  const auto& base = clean.records();
  for (const auto& set : noisy) {
    const auto& recs = set.data.records();
    if (recs.size() != base.size()) fail("noisy set at level " + level_label(set.level) + " has a different size");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (recs[i].id != base[i].id) {
        fail("record id mismatch at level " + level_label(set.level) + ": '" + recs[i].id + "' vs '" +
             base[i].id + "'");
      }
    }
  }

  std::vector<int> labels;
  for (const auto& r : base) labels.push_back(r.label);

  EvalReport report;
  for (const auto& set : noisy) report.levels.push_back(set.level);
  for (const auto& m : models) {
    ModelReport mr;
    mr.name = m.name;
    std::vector<model::Probs> probs;
    probs.reserve(base.size());
    for (const auto& r : base) probs.push_back(m.score(r.text));
    mr.clean = evaluate(probs, labels, threshold);

    std::vector<NoiseAccuracy> by_level;
    for (const auto& set : noisy) {
      probs.clear();
      for (const auto& r : set.data.records()) probs.push_back(m.score(r.text));
      mr.noise.push_back({set.level, evaluate(probs, labels, threshold).accuracy});
    }
    by_level = mr.noise;
    by_level.push_back({0.0, mr.clean.accuracy});
    std::stable_sort(by_level.begin(), by_level.end(),
                     [](const auto& a, const auto& b) { return a.level < b.level; });
    for (std::size_t i = 1; i < by_level.size(); ++i) {
      if (by_level[i].accuracy > by_level[i - 1].accuracy) mr.non_increasing = false;
    }
    report.models.push_back(std::move(mr));
  }
  return report;
}

json to_json(const EvalReport& r) {
  json models = json::array();
  for (const auto& m : r.models) {
    json noise = json::array();
    for (const auto& n : m.noise) noise.push_back({{"level", n.level}, {"accuracy", n.accuracy}});
    models.push_back({{"name", m.name},
                      {"clean",
                       {{"tp", m.clean.cm.tp},
                        {"tn", m.clean.cm.tn},
                        {"fp", m.clean.cm.fp},
                        {"fn", m.clean.cm.fn},
                        {"accuracy", m.clean.accuracy},
                        {"precision", ratio_json(m.clean.precision)},
                        {"recall", ratio_json(m.clean.recall)},
                        {"f1", ratio_json(m.clean.f1)},
                        {"auc", m.clean.auc ? json(*m.clean.auc) : json(nullptr)}}},
                      {"noise", std::move(noise)},
                      {"non_increasing", m.non_increasing}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"levels", r.levels},
          {"models", std::move(models)},
          {"metadata", r.metadata}};
}

EvalReport report_from_json(const json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion) fail("unsupported report schema_version");
  EvalReport r;
  r.levels = j.at("levels").get<std::vector<double>>();
  r.metadata = j.value("metadata", json::object());
  for (const auto& m : j.at("models")) {
    ModelReport mr;
    mr.name = m.at("name").get<std::string>();
    const auto& c = m.at("clean");
    mr.clean.cm = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                   c.at("fn").get<std::size_t>()};
    mr.clean.accuracy = c.at("accuracy").get<double>();
    mr.clean.precision = ratio_from(c.at("precision"));
    mr.clean.recall = ratio_from(c.at("recall"));
    mr.clean.f1 = ratio_from(c.at("f1"));
    if (!c.at("auc").is_null()) mr.clean.auc = c.at("auc").get<double>();
    for (const auto& n : m.at("noise")) mr.noise.push_back({n.at("level").get<double>(), n.at("accuracy").get<double>()});
    mr.non_increasing = m.at("non_increasing").get<bool>();
    r.models.push_back(std::move(mr));
  }
  return r;
}

std::string render_text(const EvalReport& r) {
  std::size_t name_w = 5;
  for (const auto& m : r.models) name_w = std::max(name_w, m.name.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto lpad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  constexpr std::size_t kCol = 8;

  std::ostringstream os;
  os << "Clean test performance\n";
  os << pad("Model", name_w);
  for (const char* h : {"Acc", "Prec", "Rec", "F1", "AUC"}) os << "  " << lpad(h, kCol);
  os << '\n';
  for (const auto& m : r.models) {
    os << pad(m.name, name_w);
    auto flag = [](const Ratio& x) { return fixed4(x.value) + (x.degenerate ? "*" : ""); };
    os << "  " << lpad(fixed4(m.clean.accuracy), kCol) << "  " << lpad(flag(m.clean.precision), kCol) << "  "
       << lpad(flag(m.clean.recall), kCol) << "  " << lpad(flag(m.clean.f1), kCol) << "  "
       << lpad(m.clean.auc ? fixed4(*m.clean.auc) : "n/a", kCol) << '\n';
  }

  os << "\nAccuracy under character-level noise\n";
  os << pad("Model", name_w) << "  " << lpad("Clean", kCol);
  for (double l : r.levels) os << "  " << lpad(level_label(l), kCol);
  os << "  " << lpad("Monotone", kCol) << '\n';
  for (const auto& m : r.models) {
    os << pad(m.name, name_w) << "  " << lpad(fixed4(m.clean.accuracy), kCol);
    for (const auto& n : m.noise) os << "  " << lpad(fixed4(n.accuracy), kCol);
    os << "  " << lpad(m.non_increasing ? "yes" : "no", kCol) << '\n';
  }
  return os.str();
}

}  // namespace phishguard::metrics
