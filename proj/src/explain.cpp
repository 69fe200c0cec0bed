#include "phishguard/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "phishguard/error.hpp"
#include "phishguard/rng.hpp"
#include "phishguard/tokenize.hpp"

namespace phishguard::explain {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("explain", msg); }

struct TokenizedText {
  std::vector<tokenize::Token> tokens;
  std::vector<std::size_t> feature_of;  // per token
  std::vector<std::string> features;
};

TokenizedText analyse(std::string_view text) {
  TokenizedText t;
  t.tokens = tokenize::split_tokens(text);
  std::unordered_map<std::string, std::size_t> index;
  t.feature_of.reserve(t.tokens.size());
  for (const auto& tok : t.tokens) {
    auto [it, inserted] = index.emplace(tok.text, t.features.size());
    if (inserted) t.features.push_back(tok.text);
    t.feature_of.push_back(it->second);
  }
  return t;
}

std::string render(std::string_view text, const TokenizedText& t, const std::vector<bool>& keep) {
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    if (keep[t.feature_of[i]]) continue;
    out.append(text.substr(cursor, t.tokens[i].begin - cursor));
    out.push_back(' ');
    cursor = t.tokens[i].end;
  }
  out.append(text.substr(cursor));
  return out;
}

// Gaussian elimination with partial pivoting on a dense square system.
std::vector<double> solve(model::Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows;
  double scale = 0.0;
  for (double v : a.data) scale = std::max(scale, std::abs(v));
  const double tiny = std::max(scale, 1.0) * 1e-13;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) <= tiny) fail("surrogate system is singular; use ridge > 0");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

}  // namespace

void LimeConfig::validate() const {
  if (n_samples < 10) fail("LIME n_samples must be >= 10");
  if (top_k < 1) fail("LIME top_k must be >= 1");
  if (!(ridge >= 0.0)) fail("LIME ridge must be >= 0");
  if (!(kernel_width > 0.0)) fail("LIME kernel_width must be > 0");
}

double proximity_kernel(double removed_fraction, double kernel_width) {
  return std::exp(-(removed_fraction * removed_fraction) / (kernel_width * kernel_width));
}

Surrogate fit_weighted_ridge(const model::Matrix& x, std::span<const double> y,
                             std::span<const double> w, double ridge) {
  const std::size_t n = x.rows;
  const std::size_t l = x.cols;
  if (y.size() != n || w.size() != n) fail("surrogate inputs have mismatched lengths");
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(wsum > 0.0)) fail("surrogate sample weights sum to zero");

  std::vector<double> xbar(l, 0.0);
  double ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < l; ++j) xbar[j] += w[i] * x(i, j);
    ybar += w[i] * y[i];
  }
  for (auto& v : xbar) v /= wsum;
  ybar /= wsum;

  model::Matrix a(l, l);
  std::vector<double> b(l, 0.0);
  std::vector<double> xc(l);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < l; ++j) xc[j] = x(i, j) - xbar[j];
    const double yc = y[i] - ybar;
    for (std::size_t j = 0; j < l; ++j) {
      const double wx = w[i] * xc[j];
      if (wx == 0.0) continue;
      b[j] += wx * yc;
      for (std::size_t k = j; k < l; ++k) a(j, k) += wx * xc[k];
    }
  }
  for (std::size_t j = 0; j < l; ++j) {
    a(j, j) += ridge;
    for (std::size_t k = 0; k < j; ++k) a(j, k) = a(k, j);
  }

  Surrogate s;
  s.coef = l == 0 ? std::vector<double>{} : solve(std::move(a), std::move(b));
  s.intercept = ybar;
  for (std::size_t j = 0; j < l; ++j) s.intercept -= xbar[j] * s.coef[j];

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = s.intercept;
    for (std::size_t j = 0; j < l; ++j) pred += x(i, j) * s.coef[j];
    ss_res += w[i] * (y[i] - pred) * (y[i] - pred);
    ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  s.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return s;
}

std::vector<std::string> lime_features(std::string_view text) { return analyse(text).features; }

std::string render_masked(std::string_view text, const std::vector<bool>& keep) {
  const auto t = analyse(text);
  if (keep.size() != t.features.size()) fail("mask length does not match the feature count");
  return render(text, t, keep);
}

Explanation lime_explain(const Predictor& predictor, std::string_view text, const LimeConfig& cfg) {
  cfg.validate();
  const auto t = analyse(text);
  const std::size_t l = t.features.size();
  if (l == 0) fail("text has no tokens to explain");

  const model::Probs full = predictor(text);
  Explanation e;
  e.label = model::predict_label(full);
  e.confidence = full[static_cast<std::size_t>(e.label)];
  e.n_features = l;

  std::vector<std::vector<bool>> masks;
  if (cfg.sampling == Sampling::Exhaustive) {
    if (l > 20) fail("exhaustive sampling supports at most 20 features");
    const std::size_t total = std::size_t{1} << l;
    masks.reserve(total);
    for (std::size_t bits = total; bits-- > 0;) {  // all-ones first
      std::vector<bool> m(l);
      for (std::size_t j = 0; j < l; ++j) m[j] = (bits >> j) & 1U;
      masks.push_back(std::move(m));
    }
  } else if (l == 1) {
    masks = {{true}, {false}};
  } else {
    Rng rng(cfg.seed);
    masks.reserve(cfg.n_samples);
    masks.emplace_back(l, true);
    for (std::size_t s = 1; s < cfg.n_samples; ++s) {
      std::vector<bool> m(l);
      for (std::size_t j = 0; j < l; ++j) m[j] = rng.bernoulli(0.5);
      masks.push_back(std::move(m));
    }
  }

  const std::size_t n = masks.size();
  model::Matrix x(n, l);
  std::vector<double> y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t removed = 0;
    for (std::size_t j = 0; j < l; ++j) {
      x(i, j) = masks[i][j] ? 1.0 : 0.0;
      removed += !masks[i][j];
    }
    const model::Probs p = removed == 0 ? full : predictor(render(text, t, masks[i]));
    y[i] = p[static_cast<std::size_t>(e.label)];
    w[i] = proximity_kernel(static_cast<double>(removed) / static_cast<double>(l), cfg.kernel_width);
  }

  const auto fit = fit_weighted_ridge(x, y, w, cfg.ridge);
  e.coverage = fit.r2;
  e.intercept = fit.intercept;

  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(fit.coef[a]) > std::abs(fit.coef[b]);
  });
  const std::size_t k = std::min(cfg.top_k, l);
  for (std::size_t i = 0; i < k; ++i) e.features.push_back({t.features[order[i]], fit.coef[order[i]]});
  return e;
}

}  // namespace phishguard::explain
