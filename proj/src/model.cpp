#include "phishguard/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"
#include "phishguard/error.hpp"
#include "phishguard/rng.hpp"

namespace phishguard::model {
namespace {

using nlohmann::json;
using tokenize::kPadId;
using tokenize::TokenId;

[[noreturn]] void fail(const std::string& msg) { throw PipelineError("model", msg); }

void check_ids(const ModelParams& p, std::span<const TokenId> ids) {
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= p.vocab_size()) {
      fail("token id " + std::to_string(id) + " outside vocabulary of size " +
           std::to_string(p.vocab_size()));
    }
  }
}

}  // namespace

bool ModelParams::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(embeddings.data.begin(), embeddings.data.end(), finite) &&
         std::all_of(head_w.data.begin(), head_w.data.end(), finite) &&
         std::all_of(head_b.begin(), head_b.end(), finite);
}

ModelParams init_params(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  if (vocab_size < 2) fail("vocab_size must be at least 2");
  if (dim < 1) fail("embedding dim must be at least 1");
  ModelParams p;
  p.seed = seed;
  p.embeddings = Matrix(vocab_size, dim);
  p.head_w = Matrix(dim, kNumClasses);
  Rng rng(seed);
  for (auto& x : p.embeddings.data) x = rng.uniform(-0.05, 0.05);
  for (auto& x : p.head_w.data) x = rng.uniform(-0.05, 0.05);
  std::fill(p.embeddings.row(kPadId).begin(), p.embeddings.row(kPadId).end(), 0.0);
  return p;
}

Probs softmax(const std::array<double, kNumClasses>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

double loss(const Probs& probs, int label) {
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kLossClamp));
}

ForwardTrace forward(const ModelParams& p, std::span<const TokenId> ids, const Matrix* delta) {
  check_ids(p, ids);
  const std::size_t len = ids.size();
  const std::size_t d = p.dim();
  if (delta != nullptr && (delta->rows != len || delta->cols != d)) {
    fail("perturbation shape does not match the token embeddings");
  }

  ForwardTrace t;
  t.token_embeds = Matrix(len, d);
  t.pooled.assign(d, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    auto dst = t.token_embeds.row(i);
    const auto src = p.embeddings.row(static_cast<std::size_t>(ids[i]));
    if (delta != nullptr) {
      const auto dl = delta->row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] + dl[j];
    } else {
      std::copy(src.begin(), src.end(), dst.begin());
    }
    if (ids[i] == kPadId) continue;
    ++t.pooled_count;
    for (std::size_t j = 0; j < d; ++j) t.pooled[j] += dst[j];
  }
  if (t.pooled_count == 0) fail("sequence has no non-PAD tokens to pool");
  const double inv = 1.0 / static_cast<double>(t.pooled_count);
  for (auto& x : t.pooled) x *= inv;

  for (std::size_t k = 0; k < kNumClasses; ++k) {
    double z = p.head_b[k];
    for (std::size_t j = 0; j < d; ++j) z += t.pooled[j] * p.head_w(j, k);
    t.logits[k] = z;
  }
  t.probs = softmax(t.logits);
  return t;
}

BackwardResult backward(const ModelParams& p, std::span<const TokenId> ids, int label,
                        const Matrix* delta) {
  if (label != 0 && label != 1) fail("label must be 0 or 1");
  BackwardResult r;
  r.trace = forward(p, ids, delta);
  r.loss = loss(r.trace.probs, label);

  const std::size_t d = p.dim();
  std::array<double, kNumClasses> dlogits = r.trace.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;

  auto& g = r.grads;
  g.head_b = dlogits;
  g.head_w = Matrix(d, kNumClasses);
  std::vector<double> dpooled(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      g.head_w(j, k) = r.trace.pooled[j] * dlogits[k];
      dpooled[j] += p.head_w(j, k) * dlogits[k];
    }
  }

  const double inv = 1.0 / static_cast<double>(r.trace.pooled_count);
  g.token_embeds = Matrix(ids.size(), d);
  std::map<TokenId, std::vector<double>> rows;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == kPadId) continue;
    auto dst = g.token_embeds.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = dpooled[j] * inv;
    auto& acc = rows[ids[i]];
    if (acc.empty()) acc.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) acc[j] += dst[j];
  }
  g.embedding_rows.reserve(rows.size());
  for (auto& [id, v] : rows) g.embedding_rows.emplace_back(id, std::move(v));
  return r;
}

int predict_label(const Probs& probs) { return probs[1] > probs[0] ? 1 : 0; }

TextClassifier::TextClassifier(tokenize::Vocabulary vocab, ModelParams params, std::size_t max_len)
    : vocab_(std::move(vocab)), params_(std::move(params)), max_len_(max_len) {
  if (vocab_.size() != params_.vocab_size()) {
    fail("vocabulary size " + std::to_string(vocab_.size()) + " does not match checkpoint size " +
         std::to_string(params_.vocab_size()));
  }
}

Probs TextClassifier::predict_ids(std::span<const TokenId> ids) const {
  const bool has_content = std::any_of(ids.begin(), ids.end(), [](TokenId id) { return id != kPadId; });
  if (!has_content) return softmax(params_.head_b);
  return forward(params_, ids).probs;
}

Probs TextClassifier::predict_proba(std::string_view text) const {
  const auto seq = tokenize::encode(tokenize::normalize(text), vocab_, max_len_);
  return predict_ids(seq.ids);
}

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  json doc = {{"format_version", 1},
              {"vocab_size", p.vocab_size()},
              {"d", p.dim()},
              {"seed", p.seed},
              {"embeddings", p.embeddings.data},
              {"head_w", p.head_w.data},
              {"head_b", p.head_b}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write checkpoint '" + path.string() + "'");
  out << doc.dump() << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open checkpoint '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail("invalid checkpoint JSON: " + std::string(e.what()));
  }
  if (doc.value("format_version", 0) != 1) fail("unsupported checkpoint format_version");
  const auto v = doc.at("vocab_size").get<std::size_t>();
  const auto d = doc.at("d").get<std::size_t>();
  ModelParams p;
  p.seed = doc.value("seed", std::uint64_t{0});
  p.embeddings = Matrix(v, d);
  p.head_w = Matrix(d, kNumClasses);
  p.embeddings.data = doc.at("embeddings").get<std::vector<double>>();
  p.head_w.data = doc.at("head_w").get<std::vector<double>>();
  p.head_b = doc.at("head_b").get<Probs>();
  if (p.embeddings.data.size() != v * d || p.head_w.data.size() != d * kNumClasses) {
    fail("checkpoint tensor sizes do not match its header");
  }
  if (!p.all_finite()) fail("checkpoint contains non-finite values");
  return p;
}

}  // namespace phishguard::model
